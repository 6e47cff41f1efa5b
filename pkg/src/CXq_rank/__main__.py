"""Allow running as `python -m CXq_rank`."""

from CXq_rank.cli.app import main

main()
