"""Core configuration, models, errors and random streams"""
