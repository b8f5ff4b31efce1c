"""Writes 200000 bytes to stdout and 100000 to stderr."""
import sys

sys.stdout.write("o" * 199999 + "\n")
sys.stderr.write("e" * 99999 + "\n")
