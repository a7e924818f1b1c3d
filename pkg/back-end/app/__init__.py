"""Weak Cancellation Workbench"""
