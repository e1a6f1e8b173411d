"""
Utility modules for the frozen-ensemble toolkit
"""
