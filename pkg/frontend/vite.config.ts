import { defineConfig } from "vitest/config";

export default defineConfig({
  build: {
    target: "es2022",
    outDir: "dist",
  },
  test: {
    environment: "happy-dom",
    testTimeout: 30_000,
    hookTimeout: 60_000,
  },
});
