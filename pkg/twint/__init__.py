"""twint: the twin-t distribution family and robust maximum-likelihood fitting."""
