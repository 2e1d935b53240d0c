use base64::Engine;
use serde::Deserialize;

use super::chat::{ChatClient, ChatMessage, ChatRequest};
use super::{CaptionResult, PerceptionError};
use crate::ingest::{ColorImage, Detection2d};
use crate::scene::{ObservedRelation, SemanticCaption};
use crate::text::{canonicalize, fnv1a64};

/// Prompt asset for the remote captioner. Replies must be strict JSON.
pub const CAPTION_PROMPT_V1: &str = include_str!("../../assets/caption_prompt_v1.txt");

pub trait Captioner: Send + Sync {
    fn caption_object(
        &self,
        image: &ColorImage,
        detection: &Detection2d,
        neighbors: &[String],
    ) -> Result<CaptionResult, PerceptionError>;
}

/// Offline captioner. Uses the caption shipped with a detection when present,
/// otherwise a lookup keyed by label.
#[derive(Debug, Clone, Default)]
pub struct MockCaptioner;

impl Captioner for MockCaptioner {
    fn caption_object(
        &self,
        _image: &ColorImage,
        detection: &Detection2d,
        neighbors: &[String],
    ) -> Result<CaptionResult, PerceptionError> {
        if let Some(c) = &detection.caption {
            return Ok(c.clone());
        }
        if canonicalize(&detection.label).is_empty() {
            return Err(PerceptionError::EmptyInput("label"));
        }
        let mut out = CaptionResult {
            caption: canned_caption(&detection.label),
            relations: Vec::new(),
        };
        for n in neighbors {
            if canonicalize(n) != canonicalize(&detection.label) {
                out.relations.push(canned_relation(&detection.label, n));
            }
        }
        Ok(out)
    }
}

const COLORS: [&str; 8] = ["red", "blue", "green", "white", "black", "gray", "yellow", "brown"];
const MATERIALS: [&str; 6] = ["plastic", "wood", "metal", "fabric", "ceramic", "glass"];

/// Attribute table used by the mock captioner.
pub fn canned_caption(label: &str) -> SemanticCaption {
    let name = canonicalize(label);
    match name.as_str() {
        "pillow" => SemanticCaption::new(
            "pillow",
            "a soft, square pillow with a floral design",
            "filled with a soft material, providing compressibility and comfort",
            "intended for support when sitting or lying down, enhancing comfort in seating areas",
        ),
        "stool" => SemanticCaption::new(
            "stool",
            "A small, rounded seat with a padded top, typically covered in a beige fabric. \
             The design is simple yet stylish, featuring a soft cushion that provides comfort for sitting.",
            "The stool is sturdy and stable, designed to support a person's weight effectively. \
             It is lightweight, allowing for easy movement and positioning. \
             It can be used as a seating solution or as a footrest due to its low profile.",
            "The stool serves primarily as a seating option but can also be used as a footrest. \
             Additionally, its design allows it to function as a small table when needed, \
             making it a versatile piece of furniture.",
        ),
        _ => {
            let h = fnv1a64(name.as_bytes());
            let color = COLORS[(h % COLORS.len() as u64) as usize];
            let material = MATERIALS[((h >> 8) % MATERIALS.len() as u64) as usize];
            SemanticCaption::new(
                name.clone(),
                format!("a {color} {name}"),
                format!("a rigid {name} made of {material}"),
                format!("used as a {name}"),
            )
        }
    }
}

fn canned_relation(subject: &str, anchor: &str) -> ObservedRelation {
    let (s, a) = (canonicalize(subject), canonicalize(anchor));
    if s == "pillow" && a == "sofa" {
        return ObservedRelation {
            anchor_label: a,
            spatial: "close by".into(),
            semantic: "The pillow is an accessory placed on the sofa for comfort and support while sitting or lounging."
                .into(),
        };
    }
    ObservedRelation {
        semantic: format!("The {s} is in the same area as the {a}."),
        anchor_label: a,
        spatial: "close by".into(),
    }
}

#[derive(Deserialize)]
struct ReplyDoc {
    name: Option<String>,
    #[serde(default)]
    appearance: String,
    #[serde(default)]
    physical: String,
    #[serde(default)]
    affordance: String,
    #[serde(default)]
    relations: Vec<ObservedRelation>,
}

/// Parses a captioner reply. Tolerates a surrounding markdown code fence.
pub fn parse_caption_reply(text: &str) -> Result<CaptionResult, PerceptionError> {
    let mut body = text.trim();
    if let Some(rest) = body.strip_prefix("```") {
        body = rest.trim_start_matches("json").trim_end().trim_end_matches("```").trim();
    }
    let doc: ReplyDoc = serde_json::from_str(body).map_err(|e| PerceptionError::CaptionParse(e.to_string()))?;
    let name = doc
        .name
        .filter(|n| !n.trim().is_empty())
        .ok_or_else(|| PerceptionError::CaptionParse("missing name".into()))?;
    Ok(CaptionResult {
        caption: SemanticCaption::new(name.trim(), doc.appearance, doc.physical, doc.affordance),
        relations: doc.relations.into_iter().filter(|r| !r.anchor_label.trim().is_empty()).collect(),
    })
}

/// Captioner backed by a vision-language chat endpoint.
pub struct RemoteCaptioner {
    client: ChatClient,
    prompt: String,
    max_tokens: u32,
}

impl RemoteCaptioner {
    pub fn new(client: ChatClient) -> Self {
        Self {
            client,
            prompt: CAPTION_PROMPT_V1.to_string(),
            max_tokens: 600,
        }
    }

    pub fn with_prompt(mut self, prompt: impl Into<String>) -> Self {
        self.prompt = prompt.into();
        self
    }
}

/// Copy of `image` with the detection box outlined in red, two pixels wide.
pub fn draw_box(image: &ColorImage, bbox: [u32; 4]) -> ColorImage {
    let mut out = image.clone();
    let [x, y, w, h] = bbox;
    if w == 0 || h == 0 {
        return out;
    }
    let (x1, y1) = ((x + w - 1).min(out.width() - 1), (y + h - 1).min(out.height() - 1));
    for t in 0..2 {
        for u in x..=x1 {
            for v in [y + t, y1.saturating_sub(t)] {
                if v < out.height() {
                    out.set(u, v, [255, 0, 0]);
                }
            }
        }
        for v in y..=y1 {
            for u in [x + t, x1.saturating_sub(t)] {
                if u < out.width() {
                    out.set(u, v, [255, 0, 0]);
                }
            }
        }
    }
    out
}

impl Captioner for RemoteCaptioner {
    fn caption_object(
        &self,
        image: &ColorImage,
        detection: &Detection2d,
        neighbors: &[String],
    ) -> Result<CaptionResult, PerceptionError> {
        let png = draw_box(image, detection.bbox2d).encode_png();
        let b64 = base64::engine::general_purpose::STANDARD.encode(png);
        let user = format!(
            "Detector label: {}\nNeighbors: {}",
            detection.label,
            if neighbors.is_empty() { "none".to_string() } else { neighbors.join(", ") }
        );
        let req = ChatRequest::new(
            self.client.config().model.clone(),
            vec![ChatMessage::system(self.prompt.clone()), ChatMessage::user(user).with_image_png(b64)],
            self.max_tokens,
        );
        let mut last = None;
        for _ in 0..2 {
            let reply = self.client.chat_complete(&req)?;
            match parse_caption_reply(&reply.text) {
                Ok(c) => return Ok(c),
                Err(e) => {
                    log::warn!("caption reply for '{}' unparseable: {e}", detection.label);
                    last = Some(e);
                }
            }
        }
        Err(last.unwrap_or_else(|| PerceptionError::CaptionParse("no reply".into())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Mask2d;
    use crate::perception::chat::{ChatConfig, HttpReply, HttpTransport, TransportFailure};
    use std::sync::Mutex;
    use std::time::Duration;

    fn det(label: &str) -> Detection2d {
        Detection2d {
            label: label.into(),
            bbox2d: [1, 1, 4, 3],
            seg_c: Mask2d::rect(8, 6, 1, 1, 4, 3),
            seg_d: None,
            confidence: 0.8,
            caption: None,
        }
    }

    #[test]
    fn mock_uses_table_entries() {
        let img = ColorImage::new(8, 6, [0, 0, 0]);
        let r = MockCaptioner
            .caption_object(&img, &det("pillow"), &["sofa".to_string()])
            .unwrap();
        assert_eq!(r.caption.appearance, "a soft, square pillow with a floral design");
        assert_eq!(r.relations[0].spatial, "close by");
        assert!(r.relations[0].semantic.contains("accessory placed on the sofa"));
        let g1 = canned_caption("Mug");
        assert_eq!(g1, canned_caption("mug"));
        assert!(g1.has_attributes());
    }

    #[test]
    fn mock_prefers_shipped_caption() {
        let mut d = det("thing");
        d.caption = Some(CaptionResult::name_only("blue cup"));
        let r = MockCaptioner
            .caption_object(&ColorImage::new(8, 6, [0; 3]), &d, &[])
            .unwrap();
        assert_eq!(r.caption.name, "blue cup");
    }

    #[test]
    fn reply_parsing() {
        let ok = r#"```json
{"name": "mug", "appearance": "white", "physical": "ceramic", "affordance": "drinking",
 "relations": [{"anchor": "table", "spatial": "on", "semantic": "rests on the table"}]}
```"#;
        let r = parse_caption_reply(ok).unwrap();
        assert_eq!(r.caption.name, "mug");
        assert_eq!(r.relations[0].anchor_label, "table");
        assert!(matches!(
            parse_caption_reply(r#"{"appearance": "x"}"#),
            Err(PerceptionError::CaptionParse(_))
        ));
        assert!(parse_caption_reply("the object is a mug").is_err());
    }

    struct Replies(Mutex<Vec<String>>);

    impl HttpTransport for Replies {
        fn post_json(&self, _: &str, _: &[(String, String)], _: &str, _: Duration) -> Result<HttpReply, TransportFailure> {
            let text = self.0.lock().unwrap().remove(0);
            let body = serde_json::json!({
                "choices": [{ "message": { "content": text }, "finish_reason": "stop" }]
            });
            Ok(HttpReply { status: 200, body: body.to_string() })
        }
    }

    fn remote(replies: &[&str]) -> RemoteCaptioner {
        let t = Replies(Mutex::new(replies.iter().map(|s| s.to_string()).collect()));
        RemoteCaptioner::new(ChatClient::with_transport(ChatConfig::new("http://x", "k", "m"), Box::new(t)))
    }

    #[test]
    fn remote_retries_once_on_bad_json() {
        let img = ColorImage::new(8, 6, [0; 3]);
        let c = remote(&["nope", r#"{"name": "lamp", "appearance": "tall"}"#]);
        assert_eq!(c.caption_object(&img, &det("lamp"), &[]).unwrap().caption.name, "lamp");
        let c = remote(&["nope", "still nope"]);
        assert!(matches!(
            c.caption_object(&img, &det("lamp"), &[]),
            Err(PerceptionError::CaptionParse(_))
        ));
    }

    #[test]
    fn box_outline_is_drawn() {
        let img = draw_box(&ColorImage::new(8, 6, [0; 3]), [1, 1, 4, 3]);
        assert_eq!(img.get(1, 1), [255, 0, 0]);
        assert_eq!(img.get(4, 3), [255, 0, 0]);
        assert_eq!(img.get(0, 0), [0, 0, 0]);
        assert_eq!(img.get(7, 5), [0, 0, 0]);
    }
}
