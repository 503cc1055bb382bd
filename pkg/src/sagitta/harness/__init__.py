"""Verification experiments, report files and the command line."""
