"""Error types shared across the chain, contract and client layers."""


class AnkaError(Exception):
    """Base class for all package errors."""


class TxRejected(AnkaError):
    """Transaction refused before execution: no block, no state change, no gas.

    `reason` is one of REJECT_* below.
    """

    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        self.detail = detail
        super().__init__(f"{reason}: {detail}" if detail else reason)


REJECT_BAD_SIGNATURE = "BadSignature"
REJECT_BAD_NONCE = "BadNonce"
REJECT_INSUFFICIENT_FUNDS = "InsufficientFunds"
REJECT_MALFORMED = "MalformedTransaction"


class ContractRevert(AnkaError):
    """Raised by contract handlers; the chain rolls state back and charges gas used."""

    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        self.detail = detail
        super().__init__(f"{reason}: {detail}" if detail else reason)


# Revert reasons used by the marketplace contract.
REVERT_NOT_DEPLOYED = "ContractNotDeployed"
REVERT_ALREADY_DEPLOYED = "AlreadyDeployed"
REVERT_ALREADY_REGISTERED = "AlreadyRegistered"
REVERT_INVALID_NAME = "InvalidName"
REVERT_NOT_REGISTERED = "NotRegistered"
REVERT_INVALID_VOLTAGE = "InvalidVoltage"
REVERT_INVALID_PRICE = "InvalidPrice"
REVERT_INVALID_ENERGY = "InvalidEnergy"
REVERT_INVALID_POSTAL = "InvalidPostalCode"
REVERT_INVALID_LOCATION = "InvalidLocation"
REVERT_DATE_IN_PAST = "DateInPast"
REVERT_DATE_OUT_OF_WINDOW = "DateOutOfWindow"
REVERT_UNKNOWN_OFFER = "UnknownOffer"
REVERT_OFFER_NOT_ACTIVE = "OfferNotActive"
REVERT_SELF_PURCHASE = "SelfPurchase"
REVERT_NOT_SELLER = "NotSeller"
REVERT_INSUFFICIENT_FUNDS = "InsufficientFunds"

OUT_OF_GAS = "OutOfGas"


class OutOfGasSignal(AnkaError):
    """Internal: the gas meter hit the transaction gas limit."""


class CodecError(AnkaError):
    """Wire bytes do not decode to a valid transaction."""


class PostalCodeError(ValueError, AnkaError):
    """Raw postal code cannot be normalized."""


class ScenarioError(AnkaError):
    """A scripted scenario failed; `step` is the zero-based failing line."""

    def __init__(self, step: int, message: str):
        self.step = step
        super().__init__(f"step {step}: {message}")


class RpcError(AnkaError):
    """JSON-RPC error response surfaced by the client."""

    def __init__(self, code: int, message: str):
        self.code = code
        self.message = message
        super().__init__(f"rpc error {code}: {message}")


class TransportError(AnkaError):
    """Node unreachable or HTTP-level failure."""
