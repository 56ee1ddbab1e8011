"""SpotEx production rules: DSL, predicates and evaluation."""
