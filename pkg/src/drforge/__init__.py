"""drforge: a procedural PBR data factory.

Synthesizes random tabletop scenes, path-traces paired RGB clips with
G-buffers and HDR lighting encodings, renders classical image-based
lighting baselines, composites object insertions via shading ratios, and
scores results with masked image metrics.
"""

__version__ = "0.1.0"
