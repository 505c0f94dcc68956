"""Free, monotone and boolean convolutions of probability measures."""
