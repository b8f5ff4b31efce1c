"""Fails with a traceback and exit status 1."""
raise RuntimeError("intentional fixture crash")
