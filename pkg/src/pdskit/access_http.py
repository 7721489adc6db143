"""HTTP surface over the contract registry and authorization service.

JSON field names match the underlying type fields; keys in replies are hex.
"""

from typing import Optional

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import crypto
from .access import AuthorizationService, BundleRef, ContractRegistry
from .errors import (
    AlreadyBound,
    InsufficientPayment,
    InvalidReference,
    NotAuthorized,
    NotOwner,
    PdsError,
    UnknownBundle,
    UnknownChannel,
)

_STATUS = {
    UnknownChannel: 404,
    UnknownBundle: 404,
    AlreadyBound: 409,
    InvalidReference: 422,
    NotOwner: 403,
    NotAuthorized: 403,
    InsufficientPayment: 402,
}


class RefModel(BaseModel):
    kind: str
    root: str
    index: Optional[int] = None


class DeployBody(BaseModel):
    owner_id: str
    channel_root: str
    bundles: dict[str, list[RefModel]]
    prices: dict[str, int] = {}


class GrantBody(BaseModel):
    caller_id: str
    consumer_id: str
    bundle_id: str


class PurchaseBody(BaseModel):
    consumer_id: str
    bundle_id: str
    payment: int


class RegisterBody(BaseModel):
    public_key: str  # raw ed25519, hex


class NonceBody(BaseModel):
    consumer_id: str


class KeysBody(BaseModel):
    consumer_id: str
    contract_id: str
    bundle_id: str
    nonce: str
    signature: str  # hex


def _contract_doc(contract) -> dict:
    return {
        "contract_id": contract.contract_id,
        "channel_root": contract.channel_root,
        "owner_id": contract.owner_id,
        "bundles": {
            bid: [
                {"kind": r.kind, "root": r.root, "index": r.index} for r in refs
            ]
            for bid, refs in contract.bundles.items()
        },
        "prices": contract.prices,
        "acl": sorted([list(pair) for pair in contract.acl]),
    }


def create_app(registry: ContractRegistry, authz: AuthorizationService) -> FastAPI:
    app = FastAPI(title="pds-access-control")

    @app.exception_handler(PdsError)
    async def _pds_error(request: Request, exc: PdsError):
        status = _STATUS.get(type(exc), 400)
        return JSONResponse(status_code=status, content={"error": str(exc)})

    @app.post("/contracts")
    def deploy(body: DeployBody):
        bundles = {
            bid: [BundleRef(kind=r.kind, root=r.root, index=r.index) for r in refs]
            for bid, refs in body.bundles.items()
        }
        contract = registry.deploy_contract(
            body.owner_id, body.channel_root, bundles, body.prices
        )
        return _contract_doc(contract)

    @app.post("/contracts/{contract_id}/grant")
    def grant(contract_id: str, body: GrantBody):
        contract = registry.grant(
            contract_id, body.caller_id, body.consumer_id, body.bundle_id
        )
        return _contract_doc(contract)

    @app.post("/contracts/{contract_id}/purchase")
    def purchase(contract_id: str, body: PurchaseBody):
        contract = registry.purchase(
            contract_id, body.consumer_id, body.bundle_id, body.payment
        )
        return _contract_doc(contract)

    @app.get("/contracts/{contract_id}/authorized")
    def authorized(contract_id: str, consumer: str = Query(...), bundle: str = Query(...)):
        return {"authorized": registry.is_authorized(contract_id, consumer, bundle)}

    @app.post("/consumers")
    def register(body: RegisterBody):
        public = crypto.public_from_raw(bytes.fromhex(body.public_key))
        return {"consumer_id": authz.register_consumer(public)}

    @app.post("/nonce")
    def nonce(body: NonceBody):
        return {"nonce": authz.issue_nonce(body.consumer_id)}

    @app.post("/keys")
    def keys(body: KeysBody):
        released = authz.issue_keys(
            body.consumer_id,
            body.contract_id,
            body.bundle_id,
            nonce=body.nonce,
            signature=bytes.fromhex(body.signature),
        )
        return {
            "keys": {f"{root}:{index}": key.hex() for (root, index), key in released.items()}
        }

    return app
