"""
Models Module
Pydantic schemas shared by every component
"""
