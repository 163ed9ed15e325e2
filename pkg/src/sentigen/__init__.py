"""sentigen: sentiment-controlled response generation with a dual-decoder
GRU sequence-to-sequence model, from corpus construction to evaluation."""

__version__ = "0.1.0"
