"""UI utilities for asymcom console output."""
