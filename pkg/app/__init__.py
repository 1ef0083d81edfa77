"""Riesz-Cartan laboratory: numerical services, schemas and CLI controllers."""
