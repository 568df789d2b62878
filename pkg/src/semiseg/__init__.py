"""Joint temporal segmentation and classification of frame-score sequences."""
