//! Writes the fixture world under `<root>` and records the golden corpus by
//! running each workflow through the live orchestrator.
//!
//! cargo run -p geoagent-core --example build_golden -- fixtures

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use geoagent_core::corpus::{self, InputKind};
use geoagent_core::geotools::bundle::RasterGrid;
use geoagent_core::orchestrator::render_action;
use geoagent_core::orchestrator::{MemoryView, TranscriptEntry};
use geoagent_core::policy::PolicyError;
use geoagent_core::{
    run, Action, AnswerKind, Domain, FixtureStore, GeoBundle, Modality, Policy, RunOutcome, SessionConfig, TaskInput,
    TaskInstance, ToolCall, ToolRegistry, Toolkit, TrajectoryRecord,
};
use serde_json::{json, Value};

type History<'a> = &'a [TranscriptEntry];
type Make = Box<dyn Fn(History<'_>) -> ToolCall + Send + Sync>;

enum PlanStep {
    Think(String),
    Call(String, Make),
}

struct Plan {
    task: TaskInstance,
    kind: AnswerKind,
    steps: Vec<PlanStep>,
}

/// Plays a plan; each turn may read the observations recorded so far.
struct PlanPolicy<'p> {
    steps: &'p [PlanStep],
}

impl Policy for PlanPolicy<'_> {
    fn next_action(&mut self, view: &MemoryView<'_>) -> Result<String, PolicyError> {
        let history = view.memory.transcript();
        let action = match self.steps.get(history.len()) {
            None => return Err(PolicyError::ScriptExhausted(history.len())),
            Some(PlanStep::Think(t)) => Action::thought_only(t.clone()),
            Some(PlanStep::Call(t, make)) => Action::call(t.clone(), make(history)),
        };
        Ok(render_action(&action))
    }
}

fn obs(h: History<'_>, step: usize) -> &Value {
    h[step - 1]
        .observation
        .as_ref()
        .and_then(|o| o.value.as_ref())
        .unwrap_or_else(|| panic!("step {step} has no value: {:?}", h[step - 1].observation))
}

fn num(v: &Value, key: &str) -> f64 {
    v[key].as_f64().unwrap_or_else(|| panic!("`{key}` missing in {v}"))
}

fn bbox(v: &Value) -> [f64; 4] {
    let a = v["bbox"].as_array().expect("bbox");
    [0, 1, 2, 3].map(|i| a[i].as_f64().unwrap())
}

fn think(t: &str) -> PlanStep {
    PlanStep::Think(t.to_owned())
}

fn call(t: &str, tool: &str, args: Value) -> PlanStep {
    let tool = tool.to_owned();
    PlanStep::Call(t.to_owned(), Box::new(move |_| ToolCall::new(tool.clone(), args.clone())))
}

fn derive(t: &str, f: impl Fn(History<'_>) -> ToolCall + Send + Sync + 'static) -> PlanStep {
    PlanStep::Call(t.to_owned(), Box::new(f))
}

fn answer(t: &str, f: impl Fn(History<'_>) -> String + Send + Sync + 'static) -> PlanStep {
    derive(t, move |h| ToolCall::new("Terminate", json!({ "answer": f(h) })))
}

fn image(path: &str, gsd: Option<f64>) -> TaskInput {
    TaskInput {
        kind: InputKind::Image,
        path: path.into(),
        gsd_m_per_px: gsd,
        crs: None,
    }
}

fn geo(path: &str) -> TaskInput {
    TaskInput {
        kind: InputKind::GeoBundle,
        path: path.into(),
        gsd_m_per_px: None,
        crs: Some("EPSG:4326".into()),
    }
}

fn plan(id: &str, domain: Domain, modality: Modality, query: &str, inputs: Vec<TaskInput>, kind: AnswerKind, steps: Vec<PlanStep>) -> Plan {
    Plan {
        task: TaskInstance {
            id: id.into(),
            domain,
            modality,
            query: query.into(),
            inputs,
        },
        kind,
        steps,
    }
}

// --- world ----------------------------------------------------------------

fn rect(b: [f64; 4]) -> Value {
    json!([[b[0], b[1]], [b[2], b[1]], [b[2], b[3]], [b[0], b[3]], [b[0], b[1]]])
}

const TOPANGA: [f64; 4] = [-118.62, 34.07, -118.52, 34.14];
const BERKELEY: [f64; 4] = [-122.32, 37.84, -122.23, 37.9];
const MARSEILLE: [f64; 4] = [5.33, 43.26, 5.42, 43.33];
const BIG_BEAR: [f64; 4] = [-116.98, 34.22, -116.86, 34.27];
const PALISADES: [f64; 4] = [-118.58, 34.03, -118.5, 34.09];
const LYON: [f64; 4] = [4.79, 45.71, 4.9, 45.79];

fn gazetteer() -> Value {
    let [w, s, e, n] = TOPANGA;
    json!({
        "Topanga State Park": [[w, s], [e, s], [e, 34.12], [-118.57, n], [w, 34.12], [w, s]],
        "Berkeley": rect(BERKELEY),
        "Marseille": rect(MARSEILLE),
        "Big Bear Lake": rect(BIG_BEAR),
        "Palisades": rect(PALISADES),
        "Lyon": rect(LYON),
    })
}

fn pois() -> Value {
    let layer = |region: &str, query: &str, pts: &[(&str, f64, f64)]| {
        let features: Vec<Value> = pts
            .iter()
            .map(|(name, lon, lat)| {
                json!({"geometry": {"type": "point", "coordinates": [lon, lat]}, "properties": {"name": name}})
            })
            .collect();
        json!({"region": region, "query": query, "features": features})
    };
    json!([
        layer("Topanga State Park", "amenity=kindergarten", &[
            ("Canyon Sprouts", -118.601, 34.081),
            ("Oak Grove Preschool", -118.548, 34.102),
            ("Trippet Ranch Kids", -118.583, 34.118),
            ("Malibu Little School", -118.64, 34.05),
        ]),
        layer("Topanga State Park", "amenity=fire_station", &[
            ("LACoFD Station 69", -118.592, 34.09),
            ("LACoFD Station 23", -118.531, 34.112),
        ]),
        layer("Berkeley", "amenity=school", &[
            ("Berkeley High", -122.272, 37.868),
            ("Jefferson Elementary", -122.286, 37.882),
            ("Malcolm X Elementary", -122.265, 37.852),
            ("King Middle", -122.276, 37.889),
        ]),
        layer("Berkeley", "amenity=hospital", &[
            ("Alta Bates", -122.257, 37.856),
            ("Berkeley Medical Center", -122.29, 37.874),
        ]),
        layer("Berkeley", "amenity=library", &[
            ("Central Library", -122.269, 37.868),
            ("North Branch", -122.271, 37.887),
            ("West Branch", -122.294, 37.861),
        ]),
        layer("Marseille", "amenity=ferry_terminal", &[
            ("Vieux-Port", 5.372, 43.295),
            ("Gare Maritime", 5.355, 43.312),
        ]),
        layer("Marseille", "amenity=hospital", &[
            ("Hopital Europeen", 5.365, 43.309),
            ("La Timone", 5.401, 43.289),
        ]),
        layer("Lyon", "railway=station", &[
            ("Part-Dieu", 4.859, 45.761),
            ("Perrache", 4.826, 45.749),
            ("Vaise", 4.805, 45.78),
        ]),
        layer("Lyon", "amenity=parking", &[
            ("Parking Cordeliers", 4.836, 45.763),
            ("Parking Brotteaux", 4.852, 45.769),
            ("Parking Confluence", 4.818, 45.741),
        ]),
        layer("Palisades", "amenity=fire_station", &[
            ("LAFD Station 69", -118.526, 34.046),
            ("LAFD Station 23", -118.556, 34.071),
        ]),
        layer("Palisades", "amenity=school", &[
            ("Palisades Charter High", -118.538, 34.049),
            ("Marquez Elementary", -118.559, 34.058),
        ]),
        layer("Big Bear Lake", "tourism=camp_site", &[
            ("Serrano Campground", -116.915, 34.262),
            ("Pineknot Campground", -116.88, 34.235),
            ("Holcomb Valley", -116.9, 34.266),
        ]),
    ])
}

fn annotations() -> Value {
    let ann = |image: &str, label: &str, boxes: Value, masks: Value, caption: &str| {
        json!({"image": image, "label": label, "boxes": boxes, "masks_px": masks, "caption": caption})
    };
    json!([
        ann("airport_01.png", "airplane", json!([[90, 80, 110, 120], [190, 80, 210, 120]]), json!([520, 515]), ""),
        ann("airport_01.png", "left airplane", json!([[90, 80, 110, 120]]), json!([520]), ""),
        ann("airport_01.png", "right airplane", json!([[190, 80, 210, 120]]), json!([515]), ""),
        ann("airport_01.png", "scene", json!([]), json!([]), "Two parked airplanes on an apron next to a taxiway."),
        ann("harbor_02.png", "ship", json!([[40, 60, 120, 90], [150, 200, 240, 226], [300, 310, 372, 338], [420, 80, 480, 104]]), json!([1820, 1975, 1490, 1210]), ""),
        ann("harbor_02.png", "storage tank", json!([[60, 400, 100, 440], [120, 400, 160, 440], [180, 402, 216, 438]]), json!([1256, 1248, 1018]), ""),
        ann("harbor_02.png", "scene", json!([]), json!([]), "A harbor with moored ships and a row of round storage tanks."),
        ann("parking_03.png", "parking lot", json!([[20, 30, 260, 210]]), json!([]), ""),
        ann("parking_03.png", "car", json!([[30, 40, 48, 60], [60, 40, 78, 60], [90, 40, 108, 60], [30, 120, 48, 140], [200, 150, 218, 170], [320, 240, 338, 260]]), json!([]), ""),
        ann("parking_03.png", "scene", json!([]), json!([]), "A surface parking lot beside a two-lane road."),
        ann("flood_pre_04.png", "scene", json!([]), json!([]), "Farmland and a village along a narrow river."),
        ann("flood_post_04.png", "scene", json!([]), json!([]), "The river has overflowed and covers most of the fields."),
        ann("flood_post_04.png", "flooded area", json!([]), json!([]), "Water spread from the river over the eastern fields and reached the village."),
        ann("flood_post_04.png", "water extent", json!([]), json!([]), "Standing water covers roughly the eastern two thirds of the image."),
        ann("flood_post_04.png", "building", json!([[150, 40, 170, 60], [180, 44, 198, 62], [160, 90, 182, 110], [200, 120, 220, 140], [90, 200, 110, 222]]), json!([]), "Five buildings stand in flood water."),
        ann("sar_port_05.png", "ship", json!([[20, 30, 60, 44], [100, 140, 150, 156], [190, 60, 230, 72]]), json!([]), ""),
        ann("sar_port_05.png", "scene", json!([]), json!([]), "Bright point targets on dark water near a breakwater."),
        ann("sign_06.png", "text", json!([[40, 60, 280, 110]]), json!([]), ""),
        ann("sign_06.png", "scene", json!([]), json!([]), "A terminal signboard photographed from the air."),
        ann("stadium_07.png", "stadium", json!([[150, 80, 450, 320]]), json!([]), ""),
        ann("stadium_07.png", "roof", json!([]), json!([]), "The roof is white fabric over a steel ring and leaves the pitch open."),
        ann("stadium_07.png", "scene", json!([]), json!([]), "An oval stadium surrounded by parking."),
        ann("farm_08.png", "field", json!([[0, 0, 256, 256], [256, 0, 512, 256]]), json!([41200, 38750]), ""),
        ann("farm_08.png", "scene", json!([]), json!([]), "Irrigated crop fields separated by dirt roads."),
        ann("quake_pre_09.png", "scene", json!([]), json!([]), "Dense blocks of low-rise houses."),
        ann("quake_post_09.png", "collapsed building", json!([[30, 40, 70, 80], [120, 60, 160, 96], [200, 180, 236, 220]]), json!([]), "Three houses in the northern blocks have collapsed into rubble."),
        ann("rail_10.png", "first train", json!([[40, 100, 200, 124]]), json!([]), ""),
        ann("rail_10.png", "second train", json!([[40, 260, 200, 284]]), json!([]), ""),
        ann("rail_10.png", "scene", json!([]), json!([]), "Two trains waiting on parallel tracks at a yard."),
    ])
}

fn images() -> Value {
    json!({
        "airport_01.png": {"width": 300, "height": 200, "gsd_m_per_px": 0.072},
        "harbor_02.png": {"width": 512, "height": 512, "gsd_m_per_px": 0.5},
        "parking_03.png": {"width": 400, "height": 300, "gsd_m_per_px": 0.3},
        "flood_pre_04.png": {"width": 256, "height": 256, "gsd_m_per_px": 2.0},
        "flood_post_04.png": {"width": 256, "height": 256, "gsd_m_per_px": 2.0},
        "sar_port_05.png": {"width": 256, "height": 256, "gsd_m_per_px": 1.0},
        "sign_06.png": {"width": 320, "height": 240},
        "stadium_07.png": {"width": 600, "height": 400, "gsd_m_per_px": 0.5},
        "farm_08.png": {"width": 512, "height": 512, "gsd_m_per_px": 1.0},
        "quake_pre_09.png": {"width": 256, "height": 256, "gsd_m_per_px": 0.5},
        "quake_post_09.png": {"width": 256, "height": 256, "gsd_m_per_px": 0.5},
        "rail_10.png": {"width": 400, "height": 400, "gsd_m_per_px": 0.25},
    })
}

fn canned_text() -> Value {
    json!({
        "sign_06.png": "GATE 12 DEPARTURES",
        "Berkeley public libraries": "Berkeley Public Library runs a central library downtown and neighborhood branches in the north, south, west and Claremont areas.",
        "Topanga State Park": "Topanga State Park covers about 11,000 acres of the Santa Monica Mountains.",
    })
}

const N: usize = 8;

/// 8x8 scene over `b`; `f(row, col, tweak)` gives (nir, red, swir1, swir2).
fn scene(b: [f64; 4], f: impl Fn(usize, usize, f64) -> [f64; 4]) -> RasterGrid {
    let mut bands: BTreeMap<String, Vec<f64>> = ["nir", "red", "swir1", "swir2"]
        .iter()
        .map(|n| (n.to_string(), Vec::with_capacity(N * N)))
        .collect();
    for r in 0..N {
        for c in 0..N {
            let t = ((r * 7 + c * 3) % 5) as f64 * 0.01;
            let v = f(r, c, t);
            for (name, x) in ["nir", "red", "swir1", "swir2"].iter().zip(v) {
                bands.get_mut(*name).unwrap().push(x);
            }
        }
    }
    RasterGrid {
        width: N,
        height: N,
        origin: [b[0], b[3]],
        pixel_size: [(b[2] - b[0]) / N as f64, -(b[3] - b[1]) / N as f64],
        nodata: geoagent_core::geotools::bundle::NODATA,
        bands,
    }
}

fn scenes() -> Vec<(String, i64, RasterGrid)> {
    let nd = geoagent_core::geotools::bundle::NODATA;
    let healthy = |_: usize, _: usize, t: f64| [0.42 + t, 0.08 + t / 2.0, 0.2 + t, 0.12 + t / 2.0];
    vec![
        ("Palisades".into(), 2024, scene(PALISADES, healthy)),
        (
            "Palisades".into(),
            2025,
            scene(PALISADES, move |r, c, t| match (r, c) {
                (0, 0) => [nd; 4],
                (_, c) if c < 4 => [0.18 + t, 0.12, 0.3 + t, 0.3 + t / 2.0],
                _ => healthy(r, c, t),
            }),
        ),
        ("Big Bear Lake".into(), 2019, scene(BIG_BEAR, |_, _, t| [0.4 + t, 0.1, 0.22, 0.15])),
        (
            "Big Bear Lake".into(),
            2023,
            scene(BIG_BEAR, |r, _, t| if r >= 5 { [0.25 + t, 0.14, 0.22, 0.16] } else { [0.4 + t, 0.1, 0.22, 0.15] }),
        ),
        ("Lyon".into(), 2018, scene(LYON, |_, _, t| [0.3, 0.12, 0.25 + t, 0.2])),
        (
            "Lyon".into(),
            2024,
            scene(LYON, |r, c, t| if (r + c) % 3 == 0 { [0.24, 0.14, 0.38 + t, 0.26] } else { [0.3, 0.12, 0.25 + t, 0.2] }),
        ),
    ]
}

fn write_json(path: &Path, v: &impl serde::Serialize) {
    fs::write(path, serde_json::to_string_pretty(v).unwrap() + "\n").unwrap();
}

fn write_world(root: &Path) {
    fs::create_dir_all(root).unwrap();
    write_json(&root.join("gazetteer.json"), &gazetteer());
    write_json(&root.join("pois.json"), &pois());
    write_json(&root.join("annotations.json"), &annotations());
    write_json(&root.join("images.json"), &images());
    write_json(&root.join("canned_text.json"), &canned_text());
    let all = scenes();
    let records: Vec<Value> = all
        .iter()
        .map(|(region, year, grid)| json!({"region": region, "year": year, "grid": grid}))
        .collect();
    write_json(&root.join("scenes.json"), &records);
    for (region, year, file) in [("Palisades", 2025, "palisades_2025.tif"), ("Lyon", 2024, "lyon_2024.tif")] {
        let grid = &all.iter().find(|(r, y, _)| r == region && *y == year).unwrap().2;
        let mut bundle = GeoBundle::new(grid.bbox(), region);
        bundle.put_raster("scene", grid.clone());
        let dir = root.join("geotiff").join(file);
        if dir.exists() {
            fs::remove_dir_all(&dir).unwrap();
        }
        bundle.save(&dir).unwrap();
    }
}

// --- workflows ------------------------------------------------------------

fn centroid_call(t: &str, box_step: usize) -> PlanStep {
    derive(t, move |h| {
        let [x1, y1, x2, y2] = bbox(obs(h, box_step));
        ToolCall::new("Solver", json!({ "command": format!("centroid({x1}, {y1}, {x2}, {y2})") }))
    })
}

fn distance_expr(h: History<'_>, a: usize, b: usize, gsd: f64) -> String {
    let (p, q) = (obs(h, a), obs(h, b));
    format!(
        "sqrt(({}-{})^2+({}-{})^2)*{gsd}",
        num(q, "cx"),
        num(p, "cx"),
        num(q, "cy"),
        num(p, "cy")
    )
}

fn box_text(b: [f64; 4]) -> String {
    format!("[{}, {}, {}, {}]", b[0], b[1], b[2], b[3])
}

fn km(m: f64) -> String {
    format!("{:.2} km", m / 1000.0)
}

fn plans() -> Vec<Plan> {
    use AnswerKind::*;
    use Domain::*;
    use Modality::*;

    vec![
        plan(
            "airport_plane_distance",
            Aviation,
            Rgb,
            "How far apart are the two airplanes in this image, in meters?",
            vec![image("airport_01.png", Some(0.072))],
            Numeric,
            vec![
                call("Locate the left airplane.", "TextToBbox", json!({"image": "airport_01.png", "text": "left airplane"})),
                call("Locate the right airplane.", "TextToBbox", json!({"image": "airport_01.png", "text": "right airplane"})),
                centroid_call("Centre of the left airplane box.", 1),
                centroid_call("Centre of the right airplane box.", 2),
                derive("Pixel distance between the centres times the GSD of 0.072 m.", |h| {
                    ToolCall::new("Calculator", json!({"expression": distance_expr(h, 3, 4, 0.072)}))
                }),
                answer("The planes are this far apart.", |h| format!("{:.1} m", num(obs(h, 5), "result"))),
            ],
        ),
        plan(
            "airport_plane_count",
            Aviation,
            Rgb,
            "How many airplanes are parked on the apron?",
            vec![image("airport_01.png", Some(0.072))],
            Numeric,
            vec![
                think("The question is about counting one object class."),
                call("Check what the scene shows.", "ImageDescription", json!({"image": "airport_01.png"})),
                call("Count the airplanes.", "CountGivenObject", json!({"image": "airport_01.png", "text": "airplane"})),
                answer("Report the count.", |h| obs(h, 3)["count"].to_string()),
            ],
        ),
        plan(
            "harbor_ship_count",
            Transportation,
            Rgb,
            "How many ships are moored in the harbor?",
            vec![image("harbor_02.png", Some(0.5))],
            Numeric,
            vec![
                call("Detect objects in the harbor.", "ObjectDetection", json!({"image": "harbor_02.png"})),
                call("Count the ships specifically.", "CountGivenObject", json!({"image": "harbor_02.png", "text": "ship"})),
                answer("Report the ship count.", |h| format!("{} ships", obs(h, 2)["count"])),
            ],
        ),
        plan(
            "harbor_tank_area",
            Industrial,
            Rgb,
            "What is the total ground area covered by storage tanks, in square meters?",
            vec![image("harbor_02.png", Some(0.5))],
            Numeric,
            vec![
                call("Look at the scene first.", "ImageDescription", json!({"image": "harbor_02.png"})),
                call("Find one storage tank.", "TextToBbox", json!({"image": "harbor_02.png", "text": "storage tank"})),
                call("Segment all storage tanks.", "SegmentObjectPixels", json!({"image": "harbor_02.png", "text": "storage tank"})),
                derive("Pixels times the squared GSD.", |h| {
                    ToolCall::new("Calculator", json!({"expression": format!("{}*0.5^2", obs(h, 3)["total"])}))
                }),
                answer("Report the area.", |h| format!("{} m2", num(obs(h, 4), "result"))),
            ],
        ),
        plan(
            "parking_lot_bbox",
            Transportation,
            Rgb,
            "Where is the parking lot, and how many cars are inside it? Give the lot's bounding box.",
            vec![image("parking_03.png", Some(0.3))],
            Bbox,
            vec![
                call("Get an overview.", "ImageDescription", json!({"image": "parking_03.png"})),
                call("Locate the parking lot.", "TextToBbox", json!({"image": "parking_03.png", "text": "parking lot"})),
                derive("Count cars inside the lot.", |h| {
                    ToolCall::new("CountGivenObject", json!({"image": "parking_03.png", "text": "car", "bbox": obs(h, 2)["bbox"]}))
                }),
                derive("Mark the lot.", |h| {
                    ToolCall::new("DrawBox", json!({"image": "parking_03.png", "bbox": obs(h, 2)["bbox"], "label": "parking lot"}))
                }),
                answer("Report the box.", |h| {
                    format!("{} with {} cars", box_text(bbox(obs(h, 2))), obs(h, 3)["count"])
                }),
            ],
        ),
        plan(
            "flood_change_text",
            Disaster,
            CdPair,
            "Describe how the flood changed the area between the two images.",
            vec![image("flood_pre_04.png", Some(2.0)), image("flood_post_04.png", Some(2.0))],
            Text,
            vec![
                call("Describe the pre-event image.", "ImageDescription", json!({"image": "flood_pre_04.png"})),
                call("Describe the post-event image.", "ImageDescription", json!({"image": "flood_post_04.png"})),
                call("Compare the flooded area.", "ChangeDetection", json!({"text": "flooded area", "pre_image": "flood_pre_04.png", "post_image": "flood_post_04.png"})),
                call("Characterise the water extent.", "RegionAttributeDescription", json!({"image": "flood_post_04.png", "attribute": "water extent"})),
                answer("Summarise.", |h| {
                    format!("{} {}", obs(h, 3)["description"].as_str().unwrap(), obs(h, 4)["description"].as_str().unwrap())
                }),
            ],
        ),
        plan(
            "sar_ship_count",
            Transportation,
            Sar,
            "How many ships are visible in this SAR image?",
            vec![image("sar_port_05.png", Some(1.0))],
            Numeric,
            vec![
                think("Bright compact returns on water are likely ships."),
                call("Describe the SAR scene.", "ImageDescription", json!({"image": "sar_port_05.png"})),
                call("Run detection.", "ObjectDetection", json!({"image": "sar_port_05.png"})),
                call("Count ships.", "CountGivenObject", json!({"image": "sar_port_05.png", "text": "ship"})),
                answer("Report.", |h| obs(h, 4)["count"].to_string()),
            ],
        ),
        plan(
            "sign_ocr_text",
            Aviation,
            Rgb,
            "What does the signboard say?",
            vec![image("sign_06.png", None)],
            Text,
            vec![
                call("Confirm there is a sign.", "ImageDescription", json!({"image": "sign_06.png"})),
                call("Read the text.", "OCR", json!({"image": "sign_06.png"})),
                answer("Report the text.", |h| obs(h, 2)["text"].as_str().unwrap().to_owned()),
            ],
        ),
        plan(
            "stadium_roof_text",
            Recreation,
            Rgb,
            "What does the stadium roof look like?",
            vec![image("stadium_07.png", Some(0.5))],
            Text,
            vec![
                call("Locate the stadium.", "TextToBbox", json!({"image": "stadium_07.png", "text": "stadium"})),
                derive("Describe its roof.", |h| {
                    ToolCall::new("RegionAttributeDescription", json!({"image": "stadium_07.png", "attribute": "roof", "bbox": obs(h, 1)["bbox"]}))
                }),
                answer("Report.", |h| obs(h, 2)["description"].as_str().unwrap().to_owned()),
            ],
        ),
        plan(
            "stadium_footprint",
            Recreation,
            Rgb,
            "Estimate the stadium's footprint in square meters from its bounding box.",
            vec![image("stadium_07.png", Some(0.5))],
            Numeric,
            vec![
                call("Locate the stadium.", "TextToBbox", json!({"image": "stadium_07.png", "text": "stadium"})),
                derive("Box width times height times GSD squared.", |h| {
                    let [x1, y1, x2, y2] = bbox(obs(h, 1));
                    ToolCall::new("Calculator", json!({"expression": format!("({x2}-{x1})*({y2}-{y1})*0.5^2")}))
                }),
                derive("Mark the footprint.", |h| {
                    ToolCall::new("DrawBox", json!({"image": "stadium_07.png", "bbox": obs(h, 1)["bbox"], "label": "stadium"}))
                }),
                answer("Report.", |h| format!("{} m2", num(obs(h, 2), "result"))),
            ],
        ),
        plan(
            "farm_field_area",
            Environment,
            Rgb,
            "How many hectares of crop fields are in the image? Plot the per-field areas.",
            vec![image("farm_08.png", Some(1.0))],
            Numeric,
            vec![
                call("Describe the scene.", "ImageDescription", json!({"image": "farm_08.png"})),
                call("Segment the fields.", "SegmentObjectPixels", json!({"image": "farm_08.png", "text": "field"})),
                derive("Convert pixels to hectares.", |h| {
                    ToolCall::new("Calculator", json!({"expression": format!("{}*1.0^2/10000", obs(h, 2)["total"])}))
                }),
                derive("Plot per-field pixel counts.", |h| {
                    let px: Vec<String> = obs(h, 2)["pixel_counts"].as_array().unwrap().iter().map(|v| v.to_string()).collect();
                    ToolCall::new("Plot", json!({"command": format!("bar({})", px.join(", "))}))
                }),
                answer("Report.", |h| format!("{} ha", num(obs(h, 3), "result"))),
            ],
        ),
        plan(
            "quake_damage_text",
            Disaster,
            CdPair,
            "Which buildings were damaged by the earthquake?",
            vec![image("quake_pre_09.png", Some(0.5)), image("quake_post_09.png", Some(0.5))],
            Text,
            vec![
                call("Describe the pre-event image.", "ImageDescription", json!({"image": "quake_pre_09.png"})),
                call("Look for collapsed buildings.", "ChangeDetection", json!({"text": "collapsed building", "pre_image": "quake_pre_09.png", "post_image": "quake_post_09.png"})),
                call("Count them.", "CountGivenObject", json!({"image": "quake_post_09.png", "text": "collapsed building"})),
                call("Mark the first collapse.", "DrawBox", json!({"image": "quake_post_09.png", "bbox": [30, 40, 70, 80], "label": "collapsed"})),
                answer("Summarise.", |h| obs(h, 2)["description"].as_str().unwrap().to_owned()),
            ],
        ),
        plan(
            "rail_train_distance",
            Transportation,
            Rgb,
            "What is the distance between the two trains' centres, in meters?",
            vec![image("rail_10.png", Some(0.25))],
            Numeric,
            vec![
                call("Describe the yard.", "ImageDescription", json!({"image": "rail_10.png"})),
                call("Locate the first train.", "TextToBbox", json!({"image": "rail_10.png", "text": "first train"})),
                call("Locate the second train.", "TextToBbox", json!({"image": "rail_10.png", "text": "second train"})),
                centroid_call("Centre of the first train.", 2),
                centroid_call("Centre of the second train.", 3),
                derive("Distance in pixels times 0.25 m.", |h| {
                    ToolCall::new("Calculator", json!({"expression": distance_expr(h, 4, 5, 0.25)}))
                }),
                answer("Report.", |h| format!("{} m", num(obs(h, 6), "result"))),
            ],
        ),
        plan(
            "topanga_kindergarten_map",
            Urban,
            Gis,
            "Map the kindergartens in Topanga State Park and link each to its nearest fire station.",
            vec![],
            Generation,
            vec![
                think("I need the park boundary, two POI layers and a distance layer."),
                call("Get the park boundary.", "GetAreaBoundary", json!({"place": "Topanga State Park"})),
                derive("Add kindergartens.", |h| {
                    ToolCall::new("AddPoisLayer", json!({"geopackage": obs(h, 2)["geopackage"], "query": "amenity=kindergarten", "layer_name": "kindergartens"}))
                }),
                derive("Add fire stations.", |h| {
                    ToolCall::new("AddPoisLayer", json!({"geopackage": obs(h, 2)["geopackage"], "query": "amenity=fire_station", "layer_name": "fire_stations"}))
                }),
                derive("Link each kindergarten to its nearest station.", |h| {
                    ToolCall::new("ComputeDistance", json!({"geopackage": obs(h, 2)["geopackage"], "source_layer": "kindergartens", "target_layer": "fire_stations"}))
                }),
                derive("Render the map.", |h| {
                    ToolCall::new("DisplayOnMap", json!({"geopackage": obs(h, 2)["geopackage"], "layers": ["boundary", "kindergartens", "fire_stations", obs(h, 5)["links_layer"]]}))
                }),
                answer("Point to the map.", |h| format!("Map saved to {}", obs(h, 6)["image_path"].as_str().unwrap())),
            ],
        ),
        plan(
            "topanga_kindergarten_distance",
            Urban,
            Gis,
            "What is the largest distance from a kindergarten in Topanga State Park to its nearest fire station, in km?",
            vec![],
            Numeric,
            vec![
                call("Get the park boundary.", "GetAreaBoundary", json!({"place": "Topanga State Park"})),
                call("Add kindergartens.", "AddPoisLayer", json!({"geopackage": "topanga_state_park.gpkg", "query": "amenity=kindergarten", "layer_name": "kindergartens"})),
                call("Add fire stations.", "AddPoisLayer", json!({"geopackage": "topanga_state_park.gpkg", "query": "amenity=fire_station", "layer_name": "fire_stations"})),
                call("Nearest-station distances.", "ComputeDistance", json!({"geopackage": "topanga_state_park.gpkg", "source_layer": "kindergartens", "target_layer": "fire_stations"})),
                derive("Convert the maximum to km.", |h| {
                    ToolCall::new("Calculator", json!({"expression": format!("{}/1000", num(obs(h, 4), "max_m"))}))
                }),
                answer("Report.", |h| format!("{} km", num(obs(h, 5), "result"))),
            ],
        ),
        plan(
            "berkeley_school_hospital",
            Urban,
            Gis,
            "On average, how far is a Berkeley school from the nearest hospital?",
            vec![],
            Numeric,
            vec![
                call("Get the city boundary.", "GetAreaBoundary", json!({"place": "Berkeley"})),
                call("Add schools.", "AddPoisLayer", json!({"geopackage": "berkeley.gpkg", "query": "amenity=school", "layer_name": "schools"})),
                call("Add hospitals.", "AddPoisLayer", json!({"geopackage": "berkeley.gpkg", "query": "amenity=hospital", "layer_name": "hospitals"})),
                call("Distances.", "ComputeDistance", json!({"geopackage": "berkeley.gpkg", "source_layer": "schools", "target_layer": "hospitals"})),
                answer("Report the mean.", |h| km(num(obs(h, 4), "mean_m"))),
            ],
        ),
        plan(
            "berkeley_library_search",
            Urban,
            Gis,
            "How is the Berkeley public library system organised, and how many branches fall inside the city boundary?",
            vec![],
            Text,
            vec![
                call("Search for background.", "GoogleSearch", json!({"query": "Berkeley public libraries"})),
                call("Get the city boundary.", "GetAreaBoundary", json!({"place": "Berkeley"})),
                call("Add libraries.", "AddPoisLayer", json!({"geopackage": "berkeley.gpkg", "query": "amenity=library", "layer_name": "libraries"})),
                answer("Summarise.", |h| {
                    format!("{} {} library sites fall inside the city boundary.", obs(h, 1)["results"].as_str().unwrap(), obs(h, 3)["count"])
                }),
            ],
        ),
        plan(
            "marseille_ferry_map",
            Transportation,
            Gis,
            "Map the ferry terminals of Marseille with their nearest hospital, including a 500 m margin around the city.",
            vec![],
            Generation,
            vec![
                call("Boundary with a margin.", "GetAreaBoundary", json!({"place": "Marseille", "buffer_m": 500})),
                call("Add ferry terminals.", "AddPoisLayer", json!({"geopackage": "marseille.gpkg", "query": "amenity=ferry_terminal", "layer_name": "ferries"})),
                call("Add hospitals.", "AddPoisLayer", json!({"geopackage": "marseille.gpkg", "query": "amenity=hospital", "layer_name": "hospitals"})),
                call("Link terminals to hospitals.", "ComputeDistance", json!({"geopackage": "marseille.gpkg", "source_layer": "ferries", "target_layer": "hospitals"})),
                call("Render.", "DisplayOnMap", json!({"geopackage": "marseille.gpkg", "layers": ["boundary", "ferries", "hospitals", "ferries_to_hospitals"]})),
                answer("Point to the map.", |h| format!("Map saved to {}", obs(h, 5)["image_path"].as_str().unwrap())),
            ],
        ),
        plan(
            "lyon_station_parking",
            Transportation,
            Gis,
            "What is the mean straight-line distance from Lyon's stations to the nearest public parking, in kilometers?",
            vec![],
            Numeric,
            vec![
                think("Stations are sources and car parks are targets."),
                call("Boundary.", "GetAreaBoundary", json!({"place": "Lyon"})),
                call("Add stations.", "AddPoisLayer", json!({"geopackage": "lyon.gpkg", "query": "railway=station", "layer_name": "stations"})),
                call("Add parking.", "AddPoisLayer", json!({"geopackage": "lyon.gpkg", "query": "amenity=parking", "layer_name": "parking"})),
                call("Distances.", "ComputeDistance", json!({"geopackage": "lyon.gpkg", "source_layer": "stations", "target_layer": "parking"})),
                derive("Mean in km.", |h| {
                    ToolCall::new("Calculator", json!({"expression": format!("{}/1000", num(obs(h, 5), "mean_m"))}))
                }),
                answer("Report.", |h| format!("{} km", num(obs(h, 6), "result"))),
            ],
        ),
        plan(
            "palisades_nbr_change",
            Disaster,
            Index,
            "Produce a burn-severity change map for the Palisades fire from the 2024 and 2025 scenes.",
            vec![geo("geotiff/palisades_2025.tif")],
            Generation,
            vec![
                call("Get the scene footprint.", "GetBboxFromGeotiff", json!({"geotiff": "geotiff/palisades_2025.tif"})),
                derive("NBR before the fire.", |h| {
                    ToolCall::new("AddIndexLayer", json!({"geopackage": obs(h, 1)["geopackage"], "index_type": "NBR", "year": 2024, "layer_name": "nbr_2024"}))
                }),
                derive("NBR after the fire.", |h| {
                    ToolCall::new("AddIndexLayer", json!({"geopackage": obs(h, 1)["geopackage"], "index_type": "NBR", "year": 2025, "layer_name": "nbr_2025"}))
                }),
                derive("Later minus earlier.", |h| {
                    ToolCall::new("ComputeIndexChange", json!({"geopackage": obs(h, 1)["geopackage"], "index_type": "NBR", "earlier_layer": "nbr_2024", "later_layer": "nbr_2025"}))
                }),
                derive("Show the change layer.", |h| {
                    ToolCall::new("ShowIndexLayer", json!({"geopackage": obs(h, 1)["geopackage"], "index_type": "NBR", "layer_name": obs(h, 4)["change_layer"]}))
                }),
                derive("Overlay the footprint on the scene.", |h| {
                    ToolCall::new("DisplayOnGeotiff", json!({"geopackage": obs(h, 1)["geopackage"], "layers": ["boundary"], "geotiff": "geotiff/palisades_2025.tif"}))
                }),
                answer("Point to the map.", |h| format!("Change map saved to {}", obs(h, 5)["image_path"].as_str().unwrap())),
            ],
        ),
        plan(
            "palisades_nbr_loss_fraction",
            Disaster,
            Index,
            "What percentage of valid pixels lost NBR between 2024 and 2025 in the Palisades scene?",
            vec![geo("geotiff/palisades_2025.tif")],
            Numeric,
            vec![
                call("Scene footprint.", "GetBboxFromGeotiff", json!({"geotiff": "geotiff/palisades_2025.tif"})),
                call("NBR 2024.", "AddIndexLayer", json!({"geopackage": "palisades_2025_bbox.gpkg", "index_type": "NBR", "year": 2024, "layer_name": "nbr_2024"})),
                call("NBR 2025.", "AddIndexLayer", json!({"geopackage": "palisades_2025_bbox.gpkg", "index_type": "NBR", "year": 2025, "layer_name": "nbr_2025"})),
                call("Change.", "ComputeIndexChange", json!({"geopackage": "palisades_2025_bbox.gpkg", "index_type": "NBR", "earlier_layer": "nbr_2024", "later_layer": "nbr_2025", "layer_name": "dnbr"})),
                derive("Negative class over valid pixels.", |h| {
                    let o = obs(h, 4);
                    ToolCall::new("Calculator", json!({"expression": format!("{}/{}*100", o["classes"]["negative"], o["stats"]["valid_pixels"])}))
                }),
                answer("Report.", |h| format!("{:.1}%", num(obs(h, 5), "result"))),
            ],
        ),
        plan(
            "bigbear_ndvi_change",
            Environment,
            Index,
            "How did vegetation around Big Bear Lake change between 2019 and 2023?",
            vec![],
            Text,
            vec![
                call("Boundary.", "GetAreaBoundary", json!({"place": "Big Bear Lake"})),
                call("NDVI 2019.", "AddIndexLayer", json!({"geopackage": "big_bear_lake.gpkg", "index_type": "NDVI", "year": 2019, "layer_name": "ndvi_2019"})),
                call("NDVI 2023.", "AddIndexLayer", json!({"geopackage": "big_bear_lake.gpkg", "index_type": "NDVI", "year": 2023, "layer_name": "ndvi_2023"})),
                call("Change.", "ComputeIndexChange", json!({"geopackage": "big_bear_lake.gpkg", "index_type": "NDVI", "earlier_layer": "ndvi_2019", "later_layer": "ndvi_2023"})),
                call("Show the 2023 layer.", "ShowIndexLayer", json!({"geopackage": "big_bear_lake.gpkg", "index_type": "NDVI", "layer_name": "ndvi_2023"})),
                answer("Summarise.", |h| {
                    let c = &obs(h, 4)["classes"];
                    format!(
                        "Vegetation declined in {} pixels along the southern part of the area, {} pixels were stable and {} improved.",
                        c["negative"], c["neutral"], c["positive"]
                    )
                }),
            ],
        ),
        plan(
            "lyon_ndbi_builtup",
            Urban,
            Index,
            "How many pixels gained built-up signal (NDBI) in Lyon between 2018 and 2024? Plot the class counts.",
            vec![geo("geotiff/lyon_2024.tif")],
            Numeric,
            vec![
                think("NDBI increase marks new built-up surfaces."),
                call("Footprint.", "GetBboxFromGeotiff", json!({"geotiff": "geotiff/lyon_2024.tif"})),
                call("NDBI 2018.", "AddIndexLayer", json!({"geopackage": "lyon_2024_bbox.gpkg", "index_type": "NDBI", "year": 2018, "layer_name": "ndbi_2018"})),
                call("NDBI 2024.", "AddIndexLayer", json!({"geopackage": "lyon_2024_bbox.gpkg", "index_type": "NDBI", "year": 2024, "layer_name": "ndbi_2024"})),
                call("Change.", "ComputeIndexChange", json!({"geopackage": "lyon_2024_bbox.gpkg", "index_type": "NDBI", "earlier_layer": "ndbi_2018", "later_layer": "ndbi_2024"})),
                derive("Plot class counts.", |h| {
                    let c = &obs(h, 5)["classes"];
                    ToolCall::new("Plot", json!({"command": format!("bar({}, {}, {})", c["negative"], c["neutral"], c["positive"])}))
                }),
                answer("Report.", |h| format!("{} pixels", obs(h, 5)["classes"]["positive"])),
            ],
        ),
        plan(
            "bigbear_campsite_extent",
            Recreation,
            Gis,
            "Give the bounding box of the Big Bear Lake area that contains the campgrounds, and show vegetation there.",
            vec![],
            Bbox,
            vec![
                call("Boundary.", "GetAreaBoundary", json!({"place": "Big Bear Lake"})),
                call("Campgrounds.", "AddPoisLayer", json!({"geopackage": "big_bear_lake.gpkg", "query": "tourism=camp_site", "layer_name": "campgrounds"})),
                call("NDVI 2023.", "AddIndexLayer", json!({"geopackage": "big_bear_lake.gpkg", "index_type": "NDVI", "year": 2023, "layer_name": "ndvi_2023"})),
                call("Show NDVI.", "ShowIndexLayer", json!({"geopackage": "big_bear_lake.gpkg", "index_type": "NDVI", "layer_name": "ndvi_2023"})),
                call("Map campgrounds.", "DisplayOnMap", json!({"geopackage": "big_bear_lake.gpkg", "layers": ["boundary", "campgrounds"]})),
                answer("Report the box.", |h| box_text(bbox(obs(h, 1)))),
            ],
        ),
        plan(
            "harbor_tank_annotation",
            Industrial,
            Rgb,
            "Label the first storage tank in the harbor image with its diameter in meters.",
            vec![image("harbor_02.png", Some(0.5))],
            Generation,
            vec![
                call("Locate a tank.", "TextToBbox", json!({"image": "harbor_02.png", "text": "storage tank"})),
                derive("Diameter from box width.", |h| {
                    let [x1, _, x2, _] = bbox(obs(h, 1));
                    ToolCall::new("Calculator", json!({"expression": format!("({x2}-{x1})*0.5")}))
                }),
                derive("Draw the box.", |h| {
                    ToolCall::new("DrawBox", json!({"image": "harbor_02.png", "bbox": obs(h, 1)["bbox"]}))
                }),
                derive("Write the diameter next to it.", |h| {
                    let [x1, y1, ..] = bbox(obs(h, 1));
                    ToolCall::new("AddText", json!({
                        "image": obs(h, 3)["image_path"],
                        "text": format!("{} m", num(obs(h, 2), "result")),
                        "position": [x1, y1 - 12.0],
                        "color": "yellow",
                    }))
                }),
                answer("Point to the image.", |h| format!("Annotated image saved to {}", obs(h, 4)["image_path"].as_str().unwrap())),
            ],
        ),
    ]
}

fn main() {
    let root: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "fixtures".into()).into();
    write_world(&root);
    let fixtures = FixtureStore::load(&root).expect("fixture world loads");
    let out = tempfile::tempdir().unwrap();
    let toolkit = Toolkit::new(ToolRegistry::default_registry(), fixtures, out.path()).unwrap();
    let config = SessionConfig::default();

    let mut records: Vec<TrajectoryRecord> = Vec::new();
    for p in plans() {
        let mut policy = PlanPolicy { steps: &p.steps };
        let r = run(&mut policy, &p.task, p.kind, &toolkit, &config).expect("workflow runs");
        assert_eq!(r.outcome, RunOutcome::Completed, "{} did not complete", p.task.id);
        assert_eq!(r.log.failed_calls, 0, "{} has failed calls", p.task.id);
        assert_eq!(r.record.steps.len(), p.steps.len(), "{}", p.task.id);
        records.push(r.record);
    }
    let dir = root.join("corpus");
    fs::create_dir_all(&dir).unwrap();
    corpus::save_corpus(&records, &dir.join("golden.jsonl")).unwrap();
    let s = corpus::stats(&records);
    println!("{} records, {} steps", records.len(), records.iter().map(|r| r.steps.len()).sum::<usize>());
    println!("{s:?}");
}
