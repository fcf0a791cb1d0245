/**
 * VMF1 feature-file encoding: magic "VMF" + version byte "1", four u32-LE
 * fields (h, w, c, s), then h*w*c float32-LE values in (row, col, channel)
 * order.
 */

export interface FeatureGrid {
  height: number;
  width: number;
  channels: number;
  stride: number;
  /** row-major (row, col, channel), length height*width*channels */
  data: Float32Array;
}

const MAGIC = 'VMF1';
const HEADER_BYTES = 4 + 16;

export function encodeVmf(grid: FeatureGrid): Buffer {
  const { height, width, channels, stride, data } = grid;
  if (data.length !== height * width * channels) {
    throw new Error(
      `payload length ${data.length} does not match ${height}x${width}x${channels}`,
    );
  }
  for (let i = 0; i < data.length; i++) {
    if (!Number.isFinite(data[i])) {
      throw new Error(`non-finite value at flat index ${i}`);
    }
  }
  const buf = Buffer.alloc(HEADER_BYTES + data.length * 4);
  buf.write(MAGIC, 0, 'ascii');
  buf.writeUInt32LE(height, 4);
  buf.writeUInt32LE(width, 8);
  buf.writeUInt32LE(channels, 12);
  buf.writeUInt32LE(stride, 16);
  Buffer.from(data.buffer, data.byteOffset, data.byteLength).copy(buf, HEADER_BYTES);
  return buf;
}

export function decodeVmf(buf: Buffer): FeatureGrid {
  if (buf.length < 4 || buf.toString('ascii', 0, 3) !== 'VMF') {
    throw new Error('bad magic');
  }
  if (buf.toString('ascii', 3, 4) !== '1') {
    throw new Error(`unsupported version ${buf.toString('ascii', 3, 4)}`);
  }
  if (buf.length < HEADER_BYTES) {
    throw new Error('truncated header');
  }
  const height = buf.readUInt32LE(4);
  const width = buf.readUInt32LE(8);
  const channels = buf.readUInt32LE(12);
  const stride = buf.readUInt32LE(16);
  const need = height * width * channels * 4;
  if (buf.length - HEADER_BYTES < need) {
    throw new Error(`truncated payload: have ${buf.length - HEADER_BYTES}, need ${need}`);
  }
  if (buf.length - HEADER_BYTES > need) {
    throw new Error('trailing bytes after payload');
  }
  const data = new Float32Array(height * width * channels);
  for (let i = 0; i < data.length; i++) {
    data[i] = buf.readFloatLE(HEADER_BYTES + i * 4);
  }
  return { height, width, channels, stride, data };
}
