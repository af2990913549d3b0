import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["test/**/*.test.ts"],
    environment: "node",
    // The e2e suite spawns the Python gateway; give it room to boot.
    testTimeout: 60_000,
    hookTimeout: 60_000,
  },
});
