import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    environment: "node",
    // The parity test boots the Python service and runs a benchmark.
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});
