"""Shared HTTP plumbing for the embedding and completion providers.

One POST helper with bearer-token auth from the environment, two retries
with exponential backoff on transport-level failures (connection errors and
timeouts), and no retry on HTTP status errors.
"""

from __future__ import annotations

import os
import time
from typing import Any, Callable

import requests

from .errors import EndpointUnreachable, ProviderError

API_KEY_ENV = "ONTOMATCH_API_KEY"
_BODY_EXCERPT = 200


def auth_headers() -> dict[str, str]:
    token = os.environ.get(API_KEY_ENV, "")
    headers = {"Content-Type": "application/json"}
    if token:
        headers["Authorization"] = f"Bearer {token}"
    return headers


def post_json(
    url: str,
    payload: dict[str, Any],
    *,
    timeout: float = 30.0,
    retries: int = 2,
    backoff: float = 0.5,
    sleep: Callable[[float], None] = time.sleep,
) -> dict[str, Any]:
    """POST a JSON payload and return the decoded JSON response.

    Raises:
        EndpointUnreachable: connection failures or timeouts after retries.
        ProviderError: non-2xx status, carrying a body excerpt.
    """
    attempt = 0
    while True:
        try:
            response = requests.post(url, json=payload, headers=auth_headers(), timeout=timeout)
        except (requests.ConnectionError, requests.Timeout) as exc:
            if attempt >= retries:
                raise EndpointUnreachable(f"cannot reach {url}: {exc}") from exc
            sleep(backoff * (2 ** attempt))
            attempt += 1
            continue
        if response.status_code >= 400:
            raise ProviderError(response.status_code, response.text[:_BODY_EXCERPT])
        try:
            return response.json()
        except ValueError as exc:
            raise ProviderError(response.status_code, f"non-JSON body: {response.text[:_BODY_EXCERPT]}") from exc
