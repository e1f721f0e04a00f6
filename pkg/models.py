"""
Data models for the non-Gaussianity certification toolkit.
"""
from sqlmodel import SQLModel, Field as TableField
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from typing import Optional, List, Tuple, Dict
from datetime import datetime
from enum import Enum
import math

from config import (
    PERIOD_PS, WINDOW_PS, NORM_DELAY_PULSES, MAX_PULSE_LAG, WEIGHT_SUM_TOL,
    CRITERION_THRESHOLD, LIFETIME_PS, LEAK_WIDTH_PS, JITTER_PS, CASCADE_SPLIT,
)

TWO_PI = 2.0 * math.pi


# Exceptions

class CertificationError(Exception):
    """Base class for all toolkit errors."""


class ZeroIntensity(CertificationError):
    """Correlation functions requested for a state with zero mean photon number."""


class DomainError(CertificationError):
    """Argument outside the domain of a closed-form expression."""


class TruncationError(CertificationError):
    """Fock-space truncation exceeds the declared tail budget."""


class FormatError(CertificationError):
    """Malformed time-tag payload."""


class OrderError(CertificationError):
    """Time tags out of order beyond the reorder tolerance."""


class ChannelError(CertificationError):
    """Click record on an unknown detector channel."""


class NoNormalization(CertificationError):
    """Normalization peak of a correlation estimate is empty."""


class ConfigError(CertificationError):
    """Invalid simulation, analysis or run configuration."""


# Enumerations

class StreamFormat(str, Enum):
    """Enumeration for time-tag file formats."""
    BINARY = "binary"
    CSV = "csv"


class Selection(str, Enum):
    """Enumeration for three-fold coincidence selections."""
    SAME_PULSE = "same_pulse"
    PAIR_LAG = "pair_lag"
    SEPARATE = "separate"


class OutputFormat(str, Enum):
    """Enumeration for report formats."""
    CSV = "csv"
    JSON = "json"


class RunStatus(str, Enum):
    """Enumeration for recorded run outcomes."""
    OK = "ok"
    FAILED = "failed"
    INPUT_ERROR = "input_error"


# Gaussian states

class GaussianParams(BaseModel):
    """Displaced squeezed state D(α)S(ξ)|0⟩ with ξ = r·e^{iθ}, stored with φ folded into θ."""

    model_config = ConfigDict(frozen=True)

    alpha_mag: float = Field(default=0.0, description="Displacement magnitude |α|")
    phi: float = Field(default=0.0, description="Displacement phase (always 0 after canonicalization)")
    r: float = Field(default=0.0, description="Squeezing strength")
    theta: float = Field(default=0.0, description="Squeezing angle relative to the displacement, in [0, 2π)")

    @model_validator(mode="before")
    @classmethod
    def canonicalize(cls, data):
        if isinstance(data, dict):
            data = dict(data)
            alpha = float(data.get("alpha_mag", 0.0))
            r = float(data.get("r", 0.0))
            if not (math.isfinite(alpha) and math.isfinite(r)):
                raise DomainError("alpha_mag and r must be finite")
            if alpha < 0 or r < 0:
                raise DomainError(f"alpha_mag and r must be non-negative, got alpha_mag={alpha}, r={r}")
            phi = float(data.get("phi", 0.0))
            theta = float(data.get("theta", 0.0))
            data["theta"] = math.fmod(theta - 2.0 * phi, TWO_PI)
            if data["theta"] < 0:
                data["theta"] += TWO_PI
            if data["theta"] >= TWO_PI:
                data["theta"] = 0.0
            data["phi"] = 0.0
        return data

    @property
    def xi(self) -> complex:
        return self.r * complex(math.cos(self.theta), math.sin(self.theta))


class MomentTriple(BaseModel):
    """Un-normalized moments G⁽¹⁾, G⁽²⁾, G⁽³⁾."""

    model_config = ConfigDict(frozen=True)

    g1: float = Field(ge=0, description="Mean photon number ⟨a†a⟩")
    g2u: float = Field(ge=0, description="⟨a†a†aa⟩")
    g3u: float = Field(ge=0, description="⟨a†a†a†aaa⟩")


class CorrelationPoint(BaseModel):
    """Normalized correlation pair (g⁽²⁾, g⁽³⁾) with optional one-sigma errors."""

    model_config = ConfigDict(frozen=True)

    g2: float = Field(ge=0, description="Second-order correlation g⁽²⁾(0)")
    g3: float = Field(ge=0, description="Third-order correlation g⁽³⁾(0,0)")
    g2_sigma: Optional[float] = Field(default=None, ge=0, description="1σ error of g2")
    g3_sigma: Optional[float] = Field(default=None, ge=0, description="1σ error of g3, or its upper limit")
    g3_is_upper_limit: bool = Field(default=False, description="g3_sigma is a one-sided upper limit on g3")


class MixtureSpec(BaseModel):
    """Statistical mixture of displaced squeezed states."""

    model_config = ConfigDict(frozen=True)

    components: List[Tuple[float, GaussianParams]] = Field(description="(weight, state) pairs")

    @field_validator("components")
    @classmethod
    def check_weights(cls, components):
        if not components:
            raise DomainError("a mixture needs at least one component")
        for weight, _ in components:
            if not (0.0 < weight <= 1.0):
                raise DomainError(f"mixture weight {weight} outside (0, 1]")
        total = math.fsum(w for w, _ in components)
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise DomainError(f"mixture weights sum to {total!r}, expected 1")
        return components


# Bounds

class TangentLine(BaseModel):
    """Linear bound g³ + χ₂·g² ≥ χ₁ tangent to the lower boundary curve."""

    model_config = ConfigDict(frozen=True)

    chi1: float = Field(description="Intercept χ₁")
    chi2: float = Field(ge=-3.0, description="Negative slope χ₂ = -k")
    touch_g2: float = Field(ge=0, description="Tangency abscissa")

    def g3_at(self, g2):
        return self.chi1 - self.chi2 * g2


class Verdict(BaseModel):
    """Outcome of the √g³ + 3√g² < 2 certification."""

    model_config = ConfigDict(frozen=True)

    criterion_value: float = Field(ge=0, description="√g³ + 3√g²")
    non_gaussian: bool = Field(description="criterion_value < 2")
    sigma_distance: Optional[float] = Field(default=None, description="(2 - value) / σ_value")
    criterion_sigma: Optional[float] = Field(default=None, ge=0, description="Propagated σ of the criterion value")
    in_certified_region: bool = Field(default=True, description="g² < 4/9, where mixtures cannot cross the curve")
    linear_bounds: Dict[str, bool] = Field(default_factory=dict, description="Fixed tangent-line bound checks")
    joint_cumulant: Optional[float] = Field(default=None, description="g³ - 3g² + 2")

    @model_validator(mode="after")
    def check_flag(self):
        if self.non_gaussian != (self.criterion_value < CRITERION_THRESHOLD):
            raise DomainError("non_gaussian must equal criterion_value < 2")
        return self


# Time-tag analysis

class AnalysisConfig(BaseModel):
    """Pulse grid, integration window and normalization lag used for coincidence counting."""

    model_config = ConfigDict(frozen=True)

    period_ps: int = Field(default=PERIOD_PS, gt=0, description="Laser repetition period T")
    window_ps: int = Field(default=WINDOW_PS, gt=0, description="Integration window per time coordinate")
    norm_delay_pulses: int = Field(default=NORM_DELAY_PULSES, gt=0, description="Normalization delay τ in pulses")
    max_pulse_lag: int = Field(default=MAX_PULSE_LAG, ge=1, description="Pair histogram extent in pulses")
    window_center_ps: int = Field(default=0, description="Offset of the window center from the pulse center")
    n_shots: Optional[int] = Field(default=None, gt=0, description="Number of excitation pulses, if known")
    jacobi_bin_ns: float = Field(default=0.1, gt=0, description="Jacobi histogram bin width")
    jacobi_extent_ns: float = Field(default=3.2, gt=0, description="Jacobi histogram half extent")

    @model_validator(mode="after")
    def check_ranges(self):
        if self.window_ps >= self.period_ps:
            raise ConfigError(f"window_ps ({self.window_ps}) must be shorter than period_ps ({self.period_ps})")
        if self.norm_delay_pulses <= self.max_pulse_lag:
            raise ConfigError("norm_delay_pulses must exceed max_pulse_lag")
        return self

    @property
    def reach_pulses(self) -> int:
        """Largest pulse distance between clicks that can contribute to any count."""
        return 2 * self.norm_delay_pulses


class CoincidenceSet(BaseModel):
    """Two- and three-fold coincidence counts plus normalization peaks."""

    model_config = ConfigDict(frozen=True)

    pair_hist: Dict[int, int] = Field(default_factory=dict, description="Pulse lag → pooled pair count")
    triple_same: int = Field(default=0, ge=0, description="Three clicks in one pulse")
    triple_pairlag: Dict[str, int] = Field(default_factory=dict, description="Ordering pattern → count, two clicks in one pulse and one in a neighbour")
    triple_separate: float = Field(default=0.0, ge=0, description="Three-separate-pulse count per detector ordering")
    triple_separate_pooled: int = Field(default=0, ge=0, description="Three-separate-pulse count pooled over six orderings")
    singles: List[int] = Field(default_factory=lambda: [0, 0, 0], description="In-window clicks per channel")
    n_shots: int = Field(default=0, ge=0, description="Number of excitation pulses")

    @field_validator("pair_hist", "triple_pairlag")
    @classmethod
    def non_negative(cls, hist):
        if any(v < 0 for v in hist.values()):
            raise ValueError("coincidence counts must be non-negative")
        return hist


class JacobiPoint(BaseModel):
    """Jacobi coordinates of three detection times."""

    model_config = ConfigDict(frozen=True)

    j1: float = Field(description="(2t₁ - t₂ - t₃)/√6")
    j2: float = Field(description="(t₂ - t₃)/√2")


# Source simulation

class SourceConfig(BaseModel):
    """Pulsed single-photon source with leakage, losses, jitter and three-detector routing."""

    model_config = ConfigDict(frozen=True)

    n_pulses: int = Field(default=1_000_000, ge=0, description="Number of excitation pulses")
    period_ps: int = Field(default=PERIOD_PS, gt=0, description="Laser repetition period")
    emit_prob: float = Field(default=0.1, description="Single-photon emission and collection probability per pulse")
    two_photon_prob: float = Field(default=0.0, description="Two-photon probability per pulse")
    three_photon_prob: float = Field(default=0.0, description="Three-photon probability per pulse")
    lifetime_ps: float = Field(default=LIFETIME_PS, description="Exponential decay constant of the emitter")
    leak_prob: float = Field(default=0.0, description="Mean laser-leakage photons per pulse")
    leak_width_ps: float = Field(default=LEAK_WIDTH_PS, description="Gaussian width of leakage photon times")
    jitter_ps: float = Field(default=JITTER_PS, description="Gaussian detector jitter σ")
    detection_efficiency: float = Field(default=1.0, description="Independent per-photon detection probability")
    split: Tuple[float, float, float] = Field(default=CASCADE_SPLIT, description="Routing probability per detector")
    seed: int = Field(default=0, ge=0, description="Random seed")

    @model_validator(mode="after")
    def check_ranges(self):
        for name in ("emit_prob", "two_photon_prob", "three_photon_prob", "detection_efficiency"):
            value = getattr(self, name)
            if not (0.0 <= value <= 1.0):
                raise ConfigError(f"{name}={value} must lie in [0, 1]")
        if self.emit_prob + self.two_photon_prob + self.three_photon_prob > 1.0 + WEIGHT_SUM_TOL:
            raise ConfigError("photon-number probabilities exceed 1")
        if self.lifetime_ps <= 0:
            raise ConfigError("lifetime_ps must be positive")
        for name in ("leak_prob", "leak_width_ps", "jitter_ps"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        if any(p < 0 for p in self.split) or abs(math.fsum(self.split) - 1.0) > WEIGHT_SUM_TOL:
            raise ConfigError(f"split {self.split} must be non-negative and sum to 1")
        return self


# Statistics

class PoissonPair(BaseModel):
    """Expected two- and three-photon event numbers under the Gaussian null hypothesis."""

    model_config = ConfigDict(frozen=True)

    lambda2: float = Field(ge=0, description="Expected two-photon events N₂,₀")
    lambda3: float = Field(ge=0, description="Expected three-photon events N₃,₀")


class PValueResult(BaseModel):
    """Largest p-value over the Gaussian boundary."""

    model_config = ConfigDict(frozen=True)

    log10_p: float = Field(le=0, description="Base-10 logarithm of the p-value")
    argmax_g2: float = Field(ge=0, description="Boundary g² at the maximum")
    argmax_g3: float = Field(ge=0, description="Boundary g³ at the maximum")
    lambda2: float = Field(default=0.0, ge=0, description="N₂,₀ at the maximum")
    lambda3: float = Field(default=0.0, ge=0, description="N₃,₀ at the maximum")


# Run ledger

class RunRecord(SQLModel, table=True):
    """One CLI invocation with its configuration fingerprint and headline results."""

    id: Optional[int] = TableField(default=None, primary_key=True)
    subcommand: str = TableField(max_length=20, description="CLI subcommand")
    started: str = TableField(default_factory=lambda: datetime.now().strftime("%Y-%m-%d %H:%M:%S"), description="Start time")
    config_hash: str = TableField(default="", max_length=64, description="Hash of the effective configuration")
    seed: Optional[int] = TableField(default=None, description="Random seed, if any")
    input_path: Optional[str] = TableField(default=None, max_length=500, description="Input file")
    output_path: Optional[str] = TableField(default=None, max_length=500, description="Output file or directory")
    status: RunStatus = TableField(default=RunStatus.OK, description="Run outcome")
    g2: Optional[float] = TableField(default=None, description="Estimated g²")
    g3: Optional[float] = TableField(default=None, description="Estimated g³ or its upper limit")
    criterion_value: Optional[float] = TableField(default=None, description="√g³ + 3√g²")
    non_gaussian: Optional[bool] = TableField(default=None, description="Certification outcome")
    log10_p: Optional[float] = TableField(default=None, description="Maximized log10 p-value")
    summary: Optional[str] = TableField(default=None, description="JSON summary")
