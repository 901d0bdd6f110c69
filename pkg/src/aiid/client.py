"""Thin HTTP client for the registry service."""

from __future__ import annotations

import base64

import httpx


class ServerRejection(Exception):
    """Non-2xx response; carries the server's status code and detail."""

    def __init__(self, status_code: int, detail):
        self.status_code = status_code
        self.detail = detail
        super().__init__(f"server rejected request ({status_code}): {detail}")


class TransportFailure(Exception):
    pass


class RegistryClient:
    def __init__(self, base_url: str, transport: httpx.BaseTransport | None = None,
                 timeout: float = 30.0):
        self._client = httpx.Client(base_url=base_url, transport=transport, timeout=timeout)

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> "RegistryClient":
        return self

    def __exit__(self, *_exc) -> None:
        self.close()

    def _request(self, method: str, path: str, **kwargs) -> dict:
        try:
            response = self._client.request(method, path, **kwargs)
        except httpx.HTTPError as exc:
            raise TransportFailure(f"{method} {path}: {exc}") from exc
        if response.status_code >= 400:
            try:
                detail = response.json().get("detail", response.text)
            except ValueError:
                detail = response.text
            raise ServerRejection(response.status_code, detail)
        return response.json()

    def register(self, **fields) -> dict:
        return self._request("POST", "/v1/entries", json=fields)

    def update_status(self, ai_id_hex: str, new_status: str, timestamp: int,
                      authority_public_key: str, authority_signature: str) -> dict:
        return self._request(
            "POST",
            f"/v1/entries/{ai_id_hex}/status",
            json={
                "new_status": new_status,
                "timestamp": timestamp,
                "authority_public_key": authority_public_key,
                "authority_signature": authority_signature,
            },
        )

    def get_entry(self, ai_id_hex: str) -> dict:
        return self._request("GET", f"/v1/entries/{ai_id_hex}")

    def get_history(self, ai_id_hex: str) -> dict:
        return self._request("GET", f"/v1/entries/{ai_id_hex}/history")

    def issue_challenge(self, ai_id_hex: str) -> dict:
        return self._request("POST", "/v1/challenges", json={"ai_id": ai_id_hex})

    def submit_proof(self, challenge_id_hex: str, proof_bytes: bytes) -> dict:
        return self._request(
            "POST",
            "/v1/proofs",
            json={
                "challenge_id": challenge_id_hex,
                "proof": base64.b64encode(proof_bytes).decode(),
            },
        )

    def record_drift_attestation(self, **fields) -> dict:
        return self._request("POST", "/v1/drift-attestations", json=fields)

    def ledger_blocks(self, from_index: int = 0) -> list[bytes]:
        payload = self._request("GET", "/v1/ledger/blocks", params={"from": from_index})
        return [base64.b64decode(block["bytes"]) for block in payload["blocks"]]
