import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "jsdom",
    include: ["tests/**/*.test.ts"],
    // the integration suite boots the real service and waits on answer jobs
    testTimeout: 60_000,
    hookTimeout: 60_000,
  },
});
