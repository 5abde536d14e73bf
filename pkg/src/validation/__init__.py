"""Estimators and validation oracles"""
