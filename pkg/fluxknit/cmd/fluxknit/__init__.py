"""The fluxknit command."""
