"""CaseCohort v1.0 - Weighted Z-estimators for case-cohort survival designs"""

__version__ = "1.0.0"
