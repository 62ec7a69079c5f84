# models/base.py

from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass, fields, replace
from typing import Any, ClassVar, Dict, Optional, Tuple

from arrival_uncertainty.core.absorption import AbsorptiveSystem
from arrival_uncertainty.core.linops import StateVector


@dataclass(frozen=True)
class SystemModel(ABC):
    """
    A named, parameterized recipe for an absorptive system and its initial state.
    Subclasses are frozen dataclasses whose fields are the model parameters
    accepted in a configuration block.
    """

    name: ClassVar[str] = ""
    # Parameter a sweep varies, and how sweep values map onto it.
    sweep_label: ClassVar[Optional[str]] = None

    @abstractmethod
    def build(self, hbar: float = 1.0) -> Tuple[AbsorptiveSystem, StateVector]:
        """
        Construct the system and its initial state.

        Parameters:
            hbar (float): Action unit carried by the system.

        Returns:
            (AbsorptiveSystem, StateVector)
        """

    def parameters(self) -> Dict[str, Any]:
        return asdict(self)

    def sweep_value(self) -> float:
        raise NotImplementedError(f"model '{self.name}' has no sweepable parameter")

    def with_sweep_value(self, value: float) -> "SystemModel":
        raise NotImplementedError(f"model '{self.name}' has no sweepable parameter")

    def with_parameters(self, **values: Any) -> "SystemModel":
        known = {f.name for f in fields(self)}
        unknown = sorted(set(values) - known)
        if unknown:
            raise TypeError(f"unknown parameter(s) for model '{self.name}': {', '.join(unknown)}")
        return replace(self, **values)
