"""Experiment orchestration"""
