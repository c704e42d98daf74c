import "./style.css";
import { EventStream } from "./events";
import { RpcClient } from "./rpc";
import { setupApp } from "./ui";

// The bundle is static and host-agnostic; point it at a node with ?node=URL.
function nodeUrl(): string {
  return new URLSearchParams(window.location.search).get("node") ?? "http://127.0.0.1:8545";
}

window.addEventListener("DOMContentLoaded", () => {
  const rpc = new RpcClient(nodeUrl());
  const app = setupApp({
    rpc,
    streamFactory: (options) => new EventStream(rpc.baseUrl, options),
  });
  app.start().catch((exc) => {
    const status = document.getElementById("node-status");
    if (status) status.textContent = `node unreachable at ${rpc.baseUrl}: ${exc}`;
  });
});
