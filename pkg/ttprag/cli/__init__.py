# CLI package for ttprag
