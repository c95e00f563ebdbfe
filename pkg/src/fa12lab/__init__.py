"""Executable conformance laboratory for the FA1.2 token-ledger standard."""
