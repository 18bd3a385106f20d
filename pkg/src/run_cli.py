"""
Entry point for running the command line
"""
#!/usr/bin/env python3

from app.main import _setup_logger, run_command

if __name__ == "__main__":
    _setup_logger()
    raise SystemExit(run_command())
