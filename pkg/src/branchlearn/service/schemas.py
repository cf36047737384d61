"""Request/response models of the experiment service."""

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str
    version: str


class ExperimentInfo(BaseModel):
    name: str
    description: str


class ExperimentListResponse(BaseModel):
    experiments: list[ExperimentInfo]


class RunRequest(BaseModel):
    experiment: str
    seed: int = Field(default=0, ge=0)
    scale: float = Field(default=1.0, gt=0)
    threads: int = Field(default=1, ge=1)
    data_dir: str = "data"
    overrides: dict[str, str] = Field(default_factory=dict)


class FilePayload(BaseModel):
    name: str
    text: str


class RunResponse(BaseModel):
    experiment: str
    files: list[FilePayload]
    summary: list[dict]
    content_sha256: str


class CapacityRequest(BaseModel):
    d: int = Field(ge=1)
    s: int = Field(ge=1)
    m_values: list[int]


class CapacityRow(BaseModel):
    m: int
    k: int
    ln_capacity: float


class CapacityResponse(BaseModel):
    rows: list[CapacityRow]
    argmax_m: int


class ErrorBody(BaseModel):
    category: str   # usage | data | runtime
    message: str
