/**
 * Wire protocol of the tray teleoperation service: zod schemas for everything
 * we send and everything we accept. Unknown inbound fields are ignored
 * (stripped), malformed frames are rejected and counted by the caller.
 */

import { z } from "zod";

const vec3 = z.tuple([z.number(), z.number(), z.number()]);

export const targetMessage = z.object({
  type: z.literal("target"),
  t: z.number().int().nonnegative(),
  p: vec3,
});

export const modeMessage = z.object({
  type: z.literal("mode"),
  value: z.union([z.literal("F"), z.literal("FSC")]),
});

export const resetMessage = z.object({ type: z.literal("reset") });

export const configMessage = z.object({
  type: z.literal("config"),
  scale: z.number().positive().optional(),
  absolute: z.boolean().optional(),
});

export const clientMessage = z.union([
  targetMessage,
  modeMessage,
  resetMessage,
  configMessage,
]);
export type ClientMessage = z.infer<typeof clientMessage>;

export const objectStatus = z.object({
  id: z.string(),
  S: z.number().nullable(),
  B: z.number().nullable(),
  contact: z.boolean().optional(),
  p: z.array(z.number()).length(2).optional(),
});
export type ObjectStatus = z.infer<typeof objectStatus>;

export const frameMessage = z.object({
  type: z.literal("frame"),
  seq: z.number().int(),
  t: z.number(),
  mode: z.union([z.literal("F"), z.literal("FSC")]),
  tray: z.object({
    p: z.array(z.number()).length(3),
    phi_axis: z.array(z.number()).length(3),
    phi_angle: z.number(),
  }),
  desired: z.object({
    x: z.array(z.number()).length(3),
    v: z.array(z.number()).length(3),
    a: z.array(z.number()).length(3),
  }),
  objects: z.array(objectStatus),
  bounds: z.object({
    omega_dot: z.number().nullable(),
    snap: z.number().nullable(),
  }),
  solve_ms: z.number(),
  degraded: z.boolean(),
});
export type Frame = z.infer<typeof frameMessage>;

export const errorMessage = z.object({ type: z.literal("error"), message: z.string() });

/** Parse one inbound packet; returns null when it is not a well-formed frame. */
export function parseFrame(raw: string): Frame | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  const result = frameMessage.safeParse(data);
  return result.success ? result.data : null;
}

/** Serialize an outbound message, schema-checked (throws on programmer error). */
export function encodeMessage(msg: ClientMessage): string {
  return JSON.stringify(clientMessage.parse(msg));
}
