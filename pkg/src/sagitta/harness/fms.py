"""FMS v1: a plain-text distance matrix format.

::

    FMS v1 <N>
    curvature <k>        # optional
    radius <r>           # optional
    <d(1,0)>
    <d(2,0)> <d(2,1)>
    ...

The strict lower triangle follows the header in row-major order, written with
17 significant digits so that every float64 survives a round trip.  Line
breaks inside the triangle are not significant, and ``#`` starts a comment.
"""

import io

import numpy as np

from ..errors import InvalidArgumentError
from ..metric import FiniteMetricSpace


def dumps(X):
    out = io.StringIO()
    N = X.n_points
    out.write(f"FMS v1 {N}\n")
    if X.claimed_curvature is not None:
        out.write(f"curvature {X.claimed_curvature:.17g}\n")
    if X.claimed_radius is not None:
        out.write(f"radius {X.claimed_radius:.17g}\n")
    d = X.dist
    for i in range(1, N):
        out.write(" ".join(f"{v:.17g}" for v in d[i, :i]))
        out.write("\n")
    return out.getvalue()


def write(path, X):
    with open(path, "w", encoding="ascii") as fh:
        fh.write(dumps(X))


def loads(text, validate=True):
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise InvalidArgumentError("empty FMS input")
    head = lines[0].split()
    if len(head) != 3 or head[:2] != ["FMS", "v1"]:
        raise InvalidArgumentError(f"not an FMS v1 header: {lines[0]!r}")
    try:
        N = int(head[2])
    except ValueError:
        raise InvalidArgumentError(f"bad point count {head[2]!r}") from None
    if N < 1:
        raise InvalidArgumentError("FMS needs at least one point")
    meta = {}
    pos = 1
    while pos < len(lines) and lines[pos].split()[0] in ("curvature", "radius"):
        key, *rest = lines[pos].split()
        if len(rest) != 1:
            raise InvalidArgumentError(f"bad header line {lines[pos]!r}")
        meta[key] = float(rest[0])
        pos += 1
    values = np.array(" ".join(lines[pos:]).split(), dtype=float)
    expected = N * (N - 1) // 2
    if values.size != expected:
        raise InvalidArgumentError(f"expected {expected} distances, found {values.size}")
    d = np.zeros((N, N))
    d[np.tril_indices(N, -1)] = values
    d = d + d.T
    return FiniteMetricSpace(
        d,
        claimed_curvature=meta.get("curvature"),
        claimed_radius=meta.get("radius"),
        validate=validate,
    )


def read(path, validate=True):
    with open(path, encoding="ascii") as fh:
        return loads(fh.read(), validate=validate)
