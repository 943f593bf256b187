"""
Designs: ingestion, canonical coordinates, model universes and PoSI directions
"""
