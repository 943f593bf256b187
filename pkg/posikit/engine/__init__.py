"""
Monte-Carlo and closed-form computation of PoSI constants and reference bounds
"""
