"""Run-directory artifacts: TSV tables, manifests, locks and the report store."""
