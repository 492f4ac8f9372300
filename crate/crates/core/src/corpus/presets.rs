//! Built-in label spaces.
//!
//! The nuScenes and Cityscapes tables carry the remap needed to turn their
//! raw category names into plain-language labels a vision-language detector
//! can score; call [`LabelSpace::apply_remap`] before use.

use std::collections::BTreeMap;

use super::{LabelSpace, RemapEntry};

const COCO: [&str; 80] = [
    "person", "bicycle", "car", "motorcycle", "airplane", "bus", "train", "truck", "boat",
    "traffic light", "fire hydrant", "stop sign", "parking meter", "bench", "bird", "cat", "dog",
    "horse", "sheep", "cow", "elephant", "bear", "zebra", "giraffe", "backpack", "umbrella",
    "handbag", "tie", "suitcase", "frisbee", "skis", "snowboard", "sports ball", "kite",
    "baseball bat", "baseball glove", "skateboard", "surfboard", "tennis racket", "bottle",
    "wine glass", "cup", "fork", "knife", "spoon", "bowl", "banana", "apple", "sandwich", "orange",
    "broccoli", "carrot", "hot dog", "pizza", "donut", "cake", "chair", "couch", "potted plant",
    "bed", "dining table", "toilet", "tv", "laptop", "mouse", "remote", "keyboard", "cell phone",
    "microwave", "oven", "toaster", "sink", "refrigerator", "book", "clock", "vase", "scissors",
    "teddy bear", "hair drier", "toothbrush",
];

const NUSCENES: [(&str, Option<&str>); 23] = [
    ("human.pedestrian.adult", Some("Adult Pedestrian")),
    ("human.pedestrian.child", Some("Child Pedestrian")),
    ("human.pedestrian.wheelchair", Some("Pedestrian in Wheelchair")),
    ("human.pedestrian.stroller", Some("Pedestrian with Stroller")),
    ("human.pedestrian.personal_mobility", Some("Pedestrian using Personal Mobility Device")),
    ("human.pedestrian.police_officer", Some("Police Officer")),
    ("human.pedestrian.construction_worker", Some("Construction Worker")),
    ("animal", Some("Animal")),
    ("vehicle.car", Some("Car")),
    ("vehicle.motorcycle", Some("Motorcycle")),
    ("vehicle.bicycle", Some("Bicycle")),
    ("vehicle.bus.bendy", Some("Bendy Bus")),
    ("vehicle.bus.rigid", Some("Rigid Bus")),
    ("vehicle.truck", Some("Truck")),
    ("vehicle.construction", Some("Construction Vehicle")),
    ("vehicle.emergency.ambulance", Some("Ambulance")),
    ("vehicle.emergency.police", Some("Police Vehicle")),
    ("vehicle.trailer", Some("Trailer")),
    ("movable_object.barrier", Some("Barrier")),
    ("movable_object.trafficcone", Some("Traffic Cone")),
    ("movable_object.pushable_pullable", Some("Pushable/Pullable Object")),
    // unclear class reference
    ("movable_object.debris", None),
    ("static_object.bicycle_rack", Some("Bicycle Rack")),
];

// Names are already natural language; only exclusions apply.
const CITYSCAPES: [(&str, bool); 30] = [
    ("road", true),
    ("sidewalk", true),
    ("parking", true),
    ("rail track", true),
    ("person", true),
    ("rider", true),
    ("car", true),
    ("truck", true),
    ("bus", true),
    ("on rails", false),
    ("motorcycle", true),
    ("bicycle", true),
    ("caravan", true),
    ("trailer", true),
    ("building", true),
    ("wall", true),
    ("fence", true),
    ("guard rail", true),
    ("bridge", true),
    ("tunnel", true),
    ("pole", true),
    // duplicate of "pole"
    ("pole group", false),
    ("traffic sign", true),
    ("traffic light", true),
    ("vegetation", true),
    ("terrain", false),
    // background
    ("sky", false),
    ("ground", false),
    ("dynamic", false),
    ("static", false),
];

pub fn coco() -> LabelSpace {
    LabelSpace::new("coco", COCO.iter().map(|s| s.to_string()).collect(), None)
        .expect("coco labels are unique")
}

pub fn nuscenes() -> LabelSpace {
    let labels = NUSCENES.iter().map(|(k, _)| k.to_string()).collect();
    let remap: BTreeMap<String, RemapEntry> = NUSCENES
        .iter()
        .map(|(k, v)| {
            let entry = match v {
                Some(to) => RemapEntry::To(to.to_string()),
                None => RemapEntry::Drop,
            };
            (k.to_string(), entry)
        })
        .collect();
    LabelSpace::new("nuscenes", labels, Some(remap)).expect("nuscenes table is consistent")
}

pub fn cityscapes() -> LabelSpace {
    let labels = CITYSCAPES.iter().map(|(k, _)| k.to_string()).collect();
    let remap = CITYSCAPES
        .iter()
        .filter(|(_, keep)| !keep)
        .map(|(k, _)| (k.to_string(), RemapEntry::Drop))
        .collect();
    LabelSpace::new("cityscapes", labels, Some(remap)).expect("cityscapes table is consistent")
}

pub fn by_name(name: &str) -> Option<LabelSpace> {
    match name {
        "coco" => Some(coco()),
        "nuscenes" => Some(nuscenes()),
        "cityscapes" => Some(cityscapes()),
        _ => None,
    }
}
