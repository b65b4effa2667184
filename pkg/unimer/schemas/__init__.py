"""Pydantic Schemas"""
