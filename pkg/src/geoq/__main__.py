"""Make the CLI runnable using python -m geoq."""
from .cli import app

app()
