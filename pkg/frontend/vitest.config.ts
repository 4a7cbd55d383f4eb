import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "happy-dom",
    include: ["tests/**/*.test.ts"],
    // the end-to-end test spawns the labeling service and drives real rounds
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});
