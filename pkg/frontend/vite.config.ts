import { defineConfig } from "vite";

export default defineConfig({
  base: "./",
  build: { outDir: "dist", emptyOutDir: true },
  server: {
    // Dev-mode only: the built bundle is served by the engine itself.
    proxy: {
      "/api": {
        target: "http://127.0.0.1:8077",
        ws: true,
      },
    },
  },
  test: {
    include: ["tests/**/*.test.ts"],
    environment: "node",
    globalSetup: "tests/helpers/server.ts",
    testTimeout: 30000,
    hookTimeout: 120000,
  },
});
