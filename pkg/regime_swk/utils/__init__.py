"""
Utility helpers: CSV codec and artifact staging.
"""
