from .server import cli_entry

cli_entry()
