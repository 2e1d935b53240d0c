//! Ready-made synthetic scenes used by the tests and the command line.

use super::synth::{SceneSpec, Shape, SynthCamera, SynthObject, SynthRelation, Trajectory};

fn object(name: &str, color: [u8; 3], shape: Shape, texts: [&str; 3]) -> SynthObject {
    SynthObject {
        name: name.into(),
        color,
        shape,
        appearance: texts[0].into(),
        physical: texts[1].into(),
        affordance: texts[2].into(),
        relations: Vec::new(),
    }
}

fn cuboid(min: [f64; 3], max: [f64; 3]) -> Shape {
    Shape::Box { min, max }
}

fn ball(center: [f64; 3], radius: f64) -> Shape {
    Shape::Sphere { center, radius }
}

fn relate(o: &mut SynthObject, anchor: &str, semantic: &str) {
    o.relations.push(SynthRelation {
        anchor: anchor.into(),
        semantic: semantic.into(),
    });
}

fn orbit(frames: usize, radius: f64, height: f64) -> Trajectory {
    Trajectory::Orbit {
        center: [0.0, 0.0, 0.1],
        radius,
        height,
        frames,
        start_deg: 0.0,
        sweep_deg: 360.0,
    }
}

/// One box circled by `frames` views.
pub fn single_object(frames: usize) -> SceneSpec {
    SceneSpec {
        name: "single-object".into(),
        camera: SynthCamera::default(),
        trajectory: orbit(frames, 1.6, 0.8),
        objects: vec![object(
            "box",
            [200, 40, 40],
            cuboid([-0.2, -0.15, 0.0], [0.2, 0.15, 0.3]),
            ["a red cardboard box", "cardboard, light and hollow", "stores small items"],
        )],
        depth_noise_mm: 0.0,
        min_pixels: 20,
    }
}

/// A box and a ball side by side.
pub fn two_objects(frames: usize) -> SceneSpec {
    let mut s = single_object(frames);
    s.name = "two-objects".into();
    s.objects[0].shape = cuboid([-0.6, -0.15, 0.0], [-0.2, 0.15, 0.3]);
    s.objects.push(object(
        "ball",
        [40, 80, 220],
        ball([0.4, 0.0, 0.2], 0.2),
        ["a blue rubber ball", "rubber, bouncy and round", "used for playing catch"],
    ));
    s.trajectory = orbit(frames, 2.2, 1.0);
    s
}

/// Six uniquely named objects plus two groups of three same-name objects.
/// Every group member relates to a different unique anchor and has its own
/// appearance, physical and affordance text.
pub fn grounding_suite() -> SceneSpec {
    let mut tray = object(
        "tray",
        [120, 80, 40],
        cuboid([-1.3, -1.0, 0.0], [-0.7, -0.6, 0.05]),
        ["a flat wooden serving tray", "wood, rigid and thin", "carries dishes between rooms"],
    );
    relate(&mut tray, "plant", "The tray stands across from the plant at the far end.");
    let laptop = object(
        "laptop",
        [90, 90, 90],
        cuboid([-0.25, -1.0, 0.0], [0.25, -0.65, 0.04]),
        ["a silver laptop with a black keyboard", "aluminium, slim and portable", "runs software and browses the web"],
    );
    let mut lamp = object(
        "lamp",
        [250, 230, 120],
        cuboid([0.9, -0.9, 0.0], [1.1, -0.7, 0.6]),
        ["a pale desk lamp with an adjustable arm", "metal, tall and stable", "lights up the desk at night"],
    );
    relate(&mut lamp, "laptop", "The lamp shines toward the laptop screen.");
    let plant = object(
        "plant",
        [20, 100, 20],
        cuboid([-1.15, 0.65, 0.0], [-0.85, 0.95, 0.5]),
        ["a leafy potted fern", "clay pot, heavy at the base", "decorates the room with greenery"],
    );
    let clock = object(
        "clock",
        [240, 240, 240],
        cuboid([-0.12, 0.75, 0.0], [0.13, 0.85, 0.25]),
        ["a round clock with black hands", "glass face, light and flat", "tells the current time"],
    );
    let basket = object(
        "basket",
        [160, 120, 70],
        cuboid([0.8, 0.65, 0.0], [1.2, 0.95, 0.2]),
        ["a woven wicker basket", "wicker, light and open", "stores groceries and fruit"],
    );

    let mut cup_a = object(
        "cup",
        [200, 30, 30],
        ball([-1.0, -0.8, 0.17], 0.12),
        ["a glossy red mug with a white rim", "ceramic, heavy and smooth", "holds hot coffee"],
    );
    relate(&mut cup_a, "tray", "The cup rests on the tray so spills stay contained.");
    let mut cup_b = object(
        "cup",
        [30, 60, 210],
        ball([0.42, -0.8, 0.12], 0.12),
        ["a tall blue tumbler with a straw", "plastic, light and hollow", "keeps iced water cold"],
    );
    relate(&mut cup_b, "laptop", "The cup sits beside the laptop within easy reach while typing.");
    let mut cup_c = object(
        "cup",
        [40, 170, 60],
        ball([1.35, -0.8, 0.12], 0.12),
        ["a small green espresso cup with a saucer", "porcelain, thin and fragile", "serves short espresso shots"],
    );
    relate(&mut cup_c, "lamp", "The cup stands next to the lamp in the evening corner.");

    let mut book_a = object(
        "book",
        [230, 210, 40],
        cuboid([-0.7, 0.7, 0.0], [-0.45, 0.9, 0.06]),
        ["a yellow paperback novel with a creased spine", "paper, soft cover and flexible", "offers light fiction"],
    );
    relate(&mut book_a, "plant", "The book lies near the plant by the window.");
    let mut book_b = object(
        "book",
        [150, 40, 180],
        cuboid([0.25, 0.7, 0.0], [0.5, 0.9, 0.08]),
        ["a purple hardcover atlas with gold lettering", "cardboard boards, large and heavy", "shows maps of the world"],
    );
    relate(&mut book_b, "clock", "The book is kept close to the clock for quick reference.");
    let mut book_c = object(
        "book",
        [240, 130, 20],
        cuboid([0.88, 0.7, 0.2], [1.12, 0.9, 0.26]),
        ["an orange recipe binder with tabs", "plastic rings, thick and sturdy", "collects kitchen recipes"],
    );
    relate(&mut book_c, "basket", "The book sits on top of the basket with the groceries.");

    SceneSpec {
        name: "grounding".into(),
        camera: SynthCamera {
            width: 640,
            height: 480,
            vfov_deg: 60.0,
        },
        trajectory: orbit(10, 3.2, 2.2),
        objects: vec![
            tray, laptop, lamp, plant, clock, basket, cup_a, cup_b, cup_c, book_a, book_b, book_c,
        ],
        depth_noise_mm: 0.0,
        min_pixels: 20,
    }
}

/// The grounding layout with group members that differ only in appearance:
/// physical and affordance text is shared within each group, so relations are
/// needed to tell members apart whenever appearance is left out of a query.
pub fn ablation_suite() -> SceneSpec {
    let mut s = grounding_suite();
    s.name = "ablation".into();
    let cups = [
        "a red mug with a white rim",
        "a blue mug with a wide handle",
        "a green mug with a chipped edge",
    ];
    let books = [
        "a yellow paperback with a creased spine",
        "a purple hardcover with gold lettering",
        "an orange binder with colored tabs",
    ];
    let (mut ci, mut bi) = (0, 0);
    for o in &mut s.objects {
        match o.name.as_str() {
            "cup" => {
                o.appearance = cups[ci].into();
                o.physical = "ceramic, sturdy and smooth".into();
                o.affordance = "holds drinks".into();
                ci += 1;
            }
            "book" => {
                o.appearance = books[bi].into();
                o.physical = "paper pages, bound and rectangular".into();
                o.affordance = "stores written pages".into();
                bi += 1;
            }
            _ => {}
        }
    }
    s
}
