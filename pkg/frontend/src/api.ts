import type { EditorSession, Gallery, ImageRef, VariantResult } from "./types";
import { encodeGrayPngBase64 } from "./png";
import { currentImage } from "./session";

export interface InpaintRequestBody {
  image: string;
  mask: string;
  seg?: string;
  mode: string;
  class_label?: string;
  instance_mask?: string;
  seed: number;
  variants: number;
}

interface WireVariant {
  image: string;
  segmentation: string;
  seed: number;
}

export type FetchLike = (url: string, init: RequestInit) => Promise<Response>;

const API_BASE = "";

export async function health(fetchImpl: FetchLike = fetch): Promise<boolean> {
  try {
    const res = await fetchImpl(`${API_BASE}/api/health`, { method: "GET" });
    return res.ok;
  } catch {
    return false;
  }
}

function toImageRef(pngBase64: string, template: ImageRef): ImageRef {
  // Server preserves dimensions (wire contract), so reuse the current size.
  return { width: template.width, height: template.height, png: pngBase64 };
}

/**
 * Issue n seeded requests (variants=1 each) so one failed request costs one
 * thumbnail, not the whole gallery. Seeds are baseSeed..baseSeed+n-1; the
 * gallery surfaces them so any pick is reproducible via `infer --seed`.
 */
export async function requestVariants(session: EditorSession, n: number, baseSeed: number,
                                      fetchImpl: FetchLike = fetch): Promise<Gallery> {
  const image = currentImage(session);
  const body: Omit<InpaintRequestBody, "seed"> = {
    image: image.png,
    mask: encodeGrayPngBase64(session.mask),
    mode: session.mode,
    variants: 1,
  };
  if (session.classLabel !== null) body.class_label = session.classLabel;
  if (session.segmentation !== null) body.seg = encodeGrayPngBase64(session.segmentation);

  const settled = await Promise.allSettled(
    Array.from({ length: n }, (_, i) =>
      fetchImpl(`${API_BASE}/api/inpaint`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ ...body, seed: baseSeed + i }),
      }).then(async (res) => {
        if (!res.ok) throw new Error(`status ${res.status}: ${await res.text()}`);
        const data = (await res.json()) as { variants: WireVariant[] };
        return data.variants[0]!;
      }),
    ),
  );

  const variants: VariantResult[] = [];
  const failed: number[] = [];
  settled.forEach((outcome, i) => {
    if (outcome.status === "fulfilled") {
      variants.push({
        image: toImageRef(outcome.value.image, image),
        segmentation: outcome.value.segmentation,
        seed: outcome.value.seed,
      });
    } else {
      failed.push(i);
    }
  });
  if (variants.length === 0) {
    throw new Error(failed.length === n ? "server unreachable" : "all variants failed");
  }
  return { variants, failed };
}
