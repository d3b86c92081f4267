import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    environment: "node",
    // the end-to-end test spawns the API server and executes a full suite
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});
