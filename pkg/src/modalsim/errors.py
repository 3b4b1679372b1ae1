"""Exception types shared across modalsim."""


class ModalSimError(Exception):
    """Base class for all modalsim errors."""


class InvariantViolation(ModalSimError, ValueError):
    """A state or intermediate object broke a numerical invariant
    (trace, Hermiticity, positivity, normalization)."""


class SubsystemError(ModalSimError, ValueError):
    """Unknown, duplicated or colliding subsystem names."""


class DimensionMismatch(ModalSimError, ValueError):
    pass


class NonUnitaryError(ModalSimError, ValueError):
    pass


class NonHermitianError(ModalSimError, ValueError):
    pass


class OverlappingSystems(ModalSimError, ValueError):
    """Joint assignment probabilities were requested for systems that are
    not pairwise disjoint. Such probabilities are deliberately undefined."""


class ZeroProbabilityBranch(ModalSimError, ValueError):
    """Conditioning on an outcome whose probability is (numerically) zero."""


class PhotonMissError(ModalSimError, ValueError):
    """The optical image of the object grid falls outside the receptor array."""


class ConfigError(ModalSimError, ValueError):
    """Scenario configuration failed validation.

    ``errors`` holds one message per offending key.
    """

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
