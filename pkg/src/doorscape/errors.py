"""Exception hierarchy shared by all doorscape modules.

Every error carries the name of the module that raised it so the CLI can
report ``<module>: <message>`` on standard error.
"""


class DoorscapeError(Exception):
    module = "doorscape"


class ConfigError(DoorscapeError, ValueError):
    """A configuration block violates its invariants."""

    module = "config"


# mesh_grid
class MeshGridError(DoorscapeError):
    module = "mesh_grid"


class MalformedMesh(MeshGridError):
    pass


class EmptyMesh(MeshGridError):
    pass


class GridTooLarge(MeshGridError):
    pass


class SeedInvalid(MeshGridError):
    pass


class MalformedMap(MeshGridError):
    pass


# navgraph
class NavGraphError(DoorscapeError):
    module = "navgraph"


class NoObstacles(NavGraphError):
    pass


class EmptyGraph(NavGraphError):
    pass


class MalformedGraph(NavGraphError):
    pass


# posesampler
class PoseSamplerError(DoorscapeError):
    module = "posesampler"


# dataset_io
class DatasetError(DoorscapeError):
    module = "dataset_io"


class SchemaError(DatasetError):
    pass


class TooFewImages(DatasetError):
    pass


class UnknownEnvironment(DatasetError):
    pass


# detection_eval
class EvalError(DoorscapeError):
    module = "detection_eval"


class ImageMismatch(EvalError):
    pass


class NoGroundTruth(EvalError):
    pass


# cli / render
class UnknownFormat(DoorscapeError):
    module = "render"
