// Wallet session: one imported keypair bound to one node.
//
// Every submission fetches the account nonce fresh and the whole
// fetch-sign-send sequence runs under a mutex, so two concurrent flows can
// never sign against the same nonce. Balance and nonce shown anywhere come
// from get_account responses, never from local arithmetic.

import { encodeTx, GAS_LIMITS, Payload, signingBytes, TxFields, bytesToHex } from "./codec";
import { Keypair, sign } from "./keys";
import { Account, Receipt, RpcClient } from "./rpc";

export class WalletSession {
  private lock: Promise<unknown> = Promise.resolve();

  constructor(
    public readonly pair: Keypair,
    public readonly rpc: RpcClient,
  ) {}

  get address(): string {
    return this.pair.address;
  }

  account(): Promise<Account> {
    return this.rpc.getAccount(this.address);
  }

  /**
   * Sign and submit one transaction. Resolves with the receipt; rejects with
   * RpcError when the node refuses the transaction outright. A reverted
   * receipt is a normal resolution, not an error.
   */
  submit(payload: Payload, gasLimit?: number, gasPrice = 1): Promise<Receipt> {
    const run = this.lock.then(async () => {
      const account = await this.account();
      const tx: TxFields = {
        sender: this.address,
        nonce: account.nonce,
        gasLimit: gasLimit ?? GAS_LIMITS[payload.kind],
        gasPrice,
        payload,
      };
      const signature = await sign(this.pair, signingBytes(tx));
      const wire = encodeTx(tx, this.pair.publicKey, signature);
      return this.rpc.sendTransaction("0x" + bytesToHex(wire));
    });
    this.lock = run.catch(() => undefined);
    return run;
  }
}
