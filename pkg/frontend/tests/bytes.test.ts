import { describe, expect, it } from 'vitest';

import { base64ToBytes, bytesToBase64, containerFilename } from '../src/bytes.js';

describe('container byte transport', () => {
  it('round-trips arbitrary bytes without re-encoding', () => {
    const bytes = new Uint8Array(512).map((_, i) => (i * 37 + 11) % 256);
    const b64 = bytesToBase64(bytes);
    expect(base64ToBytes(b64)).toEqual(bytes);
  });

  it('decodes a server container to its exact bytes', () => {
    // "CROI" magic followed by a version byte, as the service emits it
    const container = Buffer.from([0x43, 0x52, 0x4f, 0x49, 0x01, 0x00, 0xff]);
    const fromServer = container.toString('base64');
    const decoded = base64ToBytes(fromServer);
    expect(Buffer.from(decoded).equals(container)).toBe(true);
    // what the export re-uploads is byte-identical too
    expect(bytesToBase64(decoded)).toBe(fromServer);
  });

  it('builds a filesystem-safe export name', () => {
    expect(containerFilename('Red Car!', 3)).toBe('red-car_trial3.croi');
    expect(containerFilename('  ', 1)).toBe('image_trial1.croi');
  });
});
