#!/usr/bin/env python3
"""Launcher: ``python contivae.py <command> [flags]``."""

from src.main import cli

if __name__ == "__main__":
    cli()
