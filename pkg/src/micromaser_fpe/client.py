"""Clients for the simulator service.

The CLI is a thin client over these: LocalClient drives the service
handlers in-process (no server needed for batch runs), HttpClient talks
to a remote instance over HTTP with the same request/response models.
"""
from __future__ import annotations

import httpx

from . import service
from .models import HealthResponse, RunResult, Scenario


class ServiceError(RuntimeError):
    """The service rejected the request or failed to answer."""


class LocalClient:
    """In-process client calling the service handlers directly."""

    def health(self) -> HealthResponse:
        return service.health()

    def run(self, scenario: Scenario) -> RunResult:
        return self._call(service.run, scenario)

    def sweep(self, scenario: Scenario) -> RunResult:
        return self._call(service.sweep, scenario)

    def compare(self, scenario: Scenario) -> RunResult:
        return self._call(service.compare, scenario)

    @staticmethod
    def _call(handler, scenario: Scenario) -> RunResult:
        from fastapi import HTTPException

        try:
            return handler(scenario)
        except HTTPException as exc:
            raise ServiceError(str(exc.detail)) from exc


class HttpClient:
    """Client for a remote service instance."""

    def __init__(self, base_url: str, timeout: float = 3600.0):
        self._client = httpx.Client(base_url=base_url, timeout=timeout)

    def health(self) -> HealthResponse:
        return HealthResponse(**self._get("/health"))

    def run(self, scenario: Scenario) -> RunResult:
        return RunResult(**self._post("/run", scenario))

    def sweep(self, scenario: Scenario) -> RunResult:
        return RunResult(**self._post("/sweep", scenario))

    def compare(self, scenario: Scenario) -> RunResult:
        return RunResult(**self._post("/compare", scenario))

    def _get(self, path: str) -> dict:
        resp = self._client.get(path)
        return self._check(resp)

    def _post(self, path: str, scenario: Scenario) -> dict:
        resp = self._client.post(path, json=scenario.model_dump(mode="json"))
        return self._check(resp)

    @staticmethod
    def _check(resp: httpx.Response) -> dict:
        if resp.status_code != 200:
            try:
                detail = resp.json().get("detail", resp.text)
            except ValueError:
                detail = resp.text
            raise ServiceError(f"HTTP {resp.status_code}: {detail}")
        return resp.json()


def make_client(server: str | None = None):
    """LocalClient by default, HttpClient when a server URL is given."""
    return LocalClient() if server is None else HttpClient(server)
