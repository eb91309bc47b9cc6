"""Chinese lexical fusion recognition.

Joint mention detection (BIO/CRF) and character-word coreference
(BiAffine pairing) over paragraph text, with an optional sememe-enhanced
encoder driven by a graph-attention network over a sememe lexicon.
"""

from lexfusion.numerics import Tensor, Tape, NumericsError

__all__ = ["Tensor", "Tape", "NumericsError"]
