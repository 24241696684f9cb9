// Boots a real priorsketch service for tests that exercise the HTTP
// surface end to end. Each call gets its own port and snapshot dir.

import { spawn } from 'node:child_process';
import type { ChildProcess } from 'node:child_process';
import { mkdtempSync, rmSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';

export interface LiveService {
  base: string;
  stop(): void;
}

export async function startService(opts: { corsOrigin?: string } = {}): Promise<LiveService> {
  let lastError: unknown = null;
  for (let attempt = 0; attempt < 3; attempt++) {
    const port = 20000 + Math.floor(Math.random() * 20000);
    const dir = mkdtempSync(join(tmpdir(), 'priorsketch-ui-'));
    const args = ['-m', 'priorsketch', 'serve', '--port', String(port), '--snapshot-dir', dir];
    if (opts.corsOrigin) args.push('--cors-origin', opts.corsOrigin);
    const child = spawn('python3', args, { stdio: 'ignore' });
    const base = `http://127.0.0.1:${port}`;
    try {
      await waitForReady(base, child);
      return {
        base,
        stop() {
          child.kill();
          rmSync(dir, { recursive: true, force: true });
        },
      };
    } catch (err) {
      // port clash or slow boot; try a fresh port
      lastError = err;
      child.kill();
      rmSync(dir, { recursive: true, force: true });
    }
  }
  throw lastError ?? new Error('service failed to start');
}

async function waitForReady(base: string, child: ChildProcess): Promise<void> {
  const deadline = Date.now() + 20_000;
  let exited = false;
  child.once('exit', () => { exited = true; });
  while (Date.now() < deadline && !exited) {
    try {
      const resp = await fetch(`${base}/sessions/none`);
      if (resp.status === 404) return;
    } catch {
      // not listening yet
    }
    await new Promise(resolve => setTimeout(resolve, 120));
  }
  throw new Error(exited ? 'service exited during startup' : 'service start timed out');
}

export async function until(cond: () => boolean, ms = 5000): Promise<void> {
  const deadline = Date.now() + ms;
  while (!cond()) {
    if (Date.now() > deadline) throw new Error('condition never became true');
    await new Promise(resolve => setTimeout(resolve, 25));
  }
}
