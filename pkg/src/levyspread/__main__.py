"""Support executing the CLI by doing `python -m levyspread`."""
from levyspread.cli import cli

if __name__ == "__main__":
    raise SystemExit(cli())
