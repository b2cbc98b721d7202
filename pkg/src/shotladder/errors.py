"""Exception hierarchy shared by every subpackage."""


class ShotLadderError(Exception):
    """Base class for all errors raised by shotladder."""


# media pipeline
class EmptyManifest(ShotLadderError):
    pass


class InvalidResolution(ShotLadderError):
    pass


class InvalidJob(ShotLadderError):
    pass


class ToolNotFound(ShotLadderError):
    pass


class EncodeFailed(ShotLadderError):
    def __init__(self, message: str, log_excerpt: str = ""):
        super().__init__(message if not log_excerpt else f"{message}\n{log_excerpt}")
        self.log_excerpt = log_excerpt


class FrameMismatch(ShotLadderError):
    pass


class QualityToolFailed(ShotLadderError):
    pass


class ParseFailed(ShotLadderError):
    pass


class ProbeFailed(ShotLadderError):
    pass


# features
class EmptyPool(ShotLadderError):
    pass


class BlockTooLarge(ShotLadderError):
    pass


class NeedTwoFrames(ShotLadderError):
    pass


class InvalidBitrate(ShotLadderError):
    pass


class MissingBitrate(ShotLadderError):
    pass


class TooFewBlocks(ShotLadderError):
    pass


# regression
class TooFewSamples(ShotLadderError):
    pass


class SchemaMismatch(ShotLadderError):
    pass


class NothingToEliminate(ShotLadderError):
    pass


class DegenerateInput(ShotLadderError):
    pass


class ModelLoadFailed(ShotLadderError):
    pass


# ladder
class EmptyHull(ShotLadderError):
    pass


class InsufficientPredictions(ShotLadderError):
    pass


class EmptyTable(ShotLadderError):
    pass


# evaluation
class EmptyCurve(ShotLadderError):
    pass


class NoOverlap(ShotLadderError):
    pass


class EmptyInput(ShotLadderError):
    pass


class TooFewVideos(ShotLadderError):
    pass


class NoCommonVideos(ShotLadderError):
    pass


# cli / config
class ConfigError(ShotLadderError):
    pass
