import { defineConfig } from 'vitest/config';

export default defineConfig({
  test: {
    include: ['tests/**/*.test.ts'],
    // end-to-end tests boot a real service process
    testTimeout: 90_000,
    hookTimeout: 60_000,
    environmentOptions: {
      happyDOM: { url: 'http://localhost:3000' },
    },
  },
});
