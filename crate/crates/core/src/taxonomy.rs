//! The closed set of 24 PyPI Topic classifiers used as functional categories,
//! and their partition into network classes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// One of the 24 top-level PyPI `Topic ::` classifiers.
///
/// Declaration order is the canonical order used for every listing and export.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Topic {
    AdaptiveTechnologies,
    ArtisticSoftware,
    Database,
    Communications,
    DesktopEnvironment,
    Documentation,
    Education,
    GamesEntertainment,
    HomeAutomation,
    Internet,
    Multimedia,
    OfficeBusiness,
    OtherNonlisted,
    Printing,
    Religion,
    ScientificEngineering,
    Security,
    Sociology,
    SoftwareDevelopment,
    System,
    Terminals,
    TextEditors,
    TextProcessing,
    Utilities,
}

/// Static descriptive data for a topic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TopicInfo {
    pub topic: Topic,
    pub name: &'static str,
    pub description: &'static str,
    /// PyPI subcategories; display help only.
    pub subcategories: &'static [&'static str],
}

pub const TOPIC_COUNT: usize = 24;

static TOPICS: [TopicInfo; TOPIC_COUNT] = [
    TopicInfo {
        topic: Topic::AdaptiveTechnologies,
        name: "Adaptive Technologies",
        description: "Software used as proxy to interact with other software, e.g. to provide better compatibility, or support legacy versions, or add more services to the standard functionality.",
        subcategories: &[],
    },
    TopicInfo {
        topic: Topic::ArtisticSoftware,
        name: "Artistic Software",
        description: "Code used by digital artists to work, such as illustrators or fonts designers. Do not confuse with Multimedia (see below).",
        subcategories: &[],
    },
    TopicInfo {
        topic: Topic::Database,
        name: "Database",
        description: "Libraries whose main purpose is the creation/manipulation/interaction with database systems, including client and server ends.",
        subcategories: &["Database Engines/Servers", "Front-Ends"],
    },
    TopicInfo {
        topic: Topic::Communications,
        name: "Communications",
        description: "Code used to implement/deploy systems used for communications among humans, such as chat, E-mail, conferencing, IP-telephone, etc.",
        subcategories: &[
            "BBS",
            "Chat",
            "Conferencing",
            "Email",
            "FIDO",
            "Fax",
            "File Sharing",
            "Ham Radio",
            "Internet Phone",
            "Telephony",
            "Usenet News",
        ],
    },
    TopicInfo {
        topic: Topic::DesktopEnvironment,
        name: "Desktop Environment",
        description: "Similar to System but specifically for the graphical desktop environment, e.g. windows manager, system graphical \"themes\", screensavers, etc. (see e.g. the Gnome and KDE projects).",
        subcategories: &[
            "File Managers",
            "GNUstep",
            "Gnome",
            "K Desktop Environment (KDE)",
            "PicoGUI",
            "Screen Savers",
            "Window Managers",
        ],
    },
    TopicInfo {
        topic: Topic::Documentation,
        name: "Documentation",
        description: "Libraries used to generate or process source code documentation, such as Doxygen (C/ C++), JavaDoc, Python docstrings, etc.",
        subcategories: &["Sphinx"],
    },
    TopicInfo {
        topic: Topic::Education,
        name: "Education",
        description: "Libraries used for educational purposes, such as the \"Snap!\" visual programming language.",
        subcategories: &["Computer Aided Instruction (CAI)", "Testing"],
    },
    TopicInfo {
        topic: Topic::GamesEntertainment,
        name: "Games/Entertainment",
        description: "Software whose main purpose is to contribute to game development, such as a game engine (see e.g. the Ogre and Unreal engines), a games platform (Steam, GOG), etc.",
        subcategories: &[
            "Arcade",
            "Board Games",
            "First Person Shooters",
            "Fortune Cookies",
            "Multi-User Dungeons (MUD)",
            "Puzzle Games",
            "Real Time Strategy",
            "Role-Playing",
            "Side-Scrolling/Arcade Games",
            "Simulation",
            "Turn Based Strategy",
        ],
    },
    TopicInfo {
        topic: Topic::HomeAutomation,
        name: "Home Automation",
        description: "Code intended for domotics, i.e. automation of home/buildings appliances, including lighting and sound control, heaters, ventilation, door locking, etc.",
        subcategories: &[],
    },
    TopicInfo {
        topic: Topic::Internet,
        name: "Internet",
        description: "Software used mainly for remote (aka web) interaction, including client-server protocols, remote filesystems, website development, Internet routing, distributed workflow management, etc.",
        subcategories: &[
            "File Transfer Protocol (FTP)",
            "Finger",
            "Log Analysis",
            "Name Service (DNS)",
            "Proxy Servers",
            "WAP",
            "WWW/HTTP",
            "XMPP",
            "Z39.50",
        ],
    },
    TopicInfo {
        topic: Topic::Multimedia,
        name: "Multimedia",
        description: "Libraries used for graphics, video, or sound reproduction and manipulation, e.g. multimedia players, OBS studio, VLC, Inkscape, alsamixer, OpenAL, etc.",
        subcategories: &["Graphics", "Sound/Audio", "Video"],
    },
    TopicInfo {
        topic: Topic::OfficeBusiness,
        name: "Office/Business",
        description: "Libraries used to deploy typical office programs such as word and spreadsheets processors, financial calculators, calendars, etc. Think of Microsoft Office and Outlook.",
        subcategories: &[
            "Financial",
            "Groupware",
            "News/Diary",
            "Scheduling",
            "Office Suites",
        ],
    },
    TopicInfo {
        topic: Topic::OtherNonlisted,
        name: "Other/Nonlisted Topic",
        description: "If the library can't even be categorised as Utilities because of its very niche use, it falls into this bucket. E.g. a one-use script (that was uploaded as a Maven artifact).",
        subcategories: &[],
    },
    TopicInfo {
        topic: Topic::Printing,
        name: "Printing",
        description: "Libraries for communication to printers. Consider e.g. the CUPs functionality in Linux systems.",
        subcategories: &[],
    },
    TopicInfo {
        topic: Topic::Religion,
        name: "Religion",
        description: "For the explicit use of religious purposes.",
        subcategories: &[],
    },
    TopicInfo {
        topic: Topic::ScientificEngineering,
        name: "Scientific/Engineering",
        description: "Mostly related with academic research, i.e. software used in bleeding edge fields or technologies, such as AI development, physics simulators, theorem provers, medical science, etc.",
        subcategories: &[
            "Artificial Intelligence",
            "Artificial Life",
            "Astronomy",
            "Atmospheric Science",
            "Bio-Informatics",
            "Chemistry",
            "Electronic Design Automation (EDA)",
            "GIS",
            "Hydrology",
            "Image Processing",
            "Information Analysis",
            "Interface Engine/Protocol Translator",
            "Mathematics",
            "Medical Science Apps.",
            "Oceanography",
            "Physics",
            "Visualization",
        ],
    },
    TopicInfo {
        topic: Topic::Security,
        name: "Security",
        description: "Code used to implement/deploy security measures, e.g. user authentication, data encryption, secure communication channels, etc.",
        subcategories: &["Cryptography"],
    },
    TopicInfo {
        topic: Topic::Sociology,
        name: "Sociology",
        description: "Similar to Scientific/Engineering but specifically used for social sciences and in particular sociology. Does not include statistics: that should go in Scientific/Engineering.",
        subcategories: &["Genealogy", "History"],
    },
    TopicInfo {
        topic: Topic::SoftwareDevelopment,
        name: "Software Development",
        description: "Software for the development of more software. Think of IDEs, version control, bug tracking, compilers, QA, testing, etc. \"Documenation\" not included: it has its own category.",
        subcategories: &[
            "Assemblers",
            "Bug Tracking",
            "Build Tools",
            "Code Generators",
            "Compilers",
            "Debuggers",
            "Disassemblers",
            "Documentation",
            "Embedded Systems",
            "Internationalization",
            "Interpreters",
            "Libraries",
            "Localization",
            "Object Brokering",
            "Pre-processors",
            "Quality Assurance",
            "Testing",
            "User Interfaces",
            "Version Control",
            "Widget Sets",
        ],
    },
    TopicInfo {
        topic: Topic::System,
        name: "System",
        description: "Anything used for typical operations in your own local system, e.g. file manipulation, resources monitoring, power management and boot, system shell, software package management, etc.",
        subcategories: &[
            "Archiving",
            "Benchmark",
            "Boot",
            "Clustering",
            "Console Fonts",
            "Distributed Computing",
            "Emulators",
            "Filesystems",
            "Hardware",
            "Installation/Setup",
            "Logging",
            "Monitoring",
            "Networking",
            "Operating System",
            "Operating System Kernels",
            "Power (UPS)",
            "Recovery Tools",
            "Shells",
            "Software Distribution",
            "Systems Administration",
        ],
    },
    TopicInfo {
        topic: Topic::Terminals,
        name: "Terminals",
        description: "Libraries for deployment of terminals\u{2014}not to confuse with \"shells\" which fall under System: terminals are the interface that lets you talk to the shell.",
        subcategories: &["Serial", "Telnet", "Terminal Emulators/X Terminals"],
    },
    TopicInfo {
        topic: Topic::TextEditors,
        name: "Text Editors",
        description: "Libraries used for basic text editing, such as Emacs, Vim, notepad, sublime, etc. Office-specific word processors (like Microsoft Word) don't fall here, but go to Office/Business instead.",
        subcategories: &[
            "Documentation",
            "Emacs",
            "Integrated Development Environments (IDE)",
            "Text Processing",
            "Word Processors",
        ],
    },
    TopicInfo {
        topic: Topic::TextProcessing,
        name: "Text Processing",
        description: "Software for processing (not input) generic text, e.g. regular expressions, filtering, markup. Examples are XML-HTML converters, regex filters, JSON serialisers, etc.",
        subcategories: &["Filters", "Fonts", "General", "Indexing", "Linguistic", "Markup"],
    },
    TopicInfo {
        topic: Topic::Utilities,
        name: "Utilities",
        description: "Category for \"miscelanea\", i.e. anything you could not fit properly in any other category.",
        subcategories: &[],
    },
];

impl Topic {
    /// All topics in canonical order.
    pub fn all() -> impl ExactSizeIterator<Item = Topic> + Clone {
        TOPICS.iter().map(|info| info.topic)
    }

    pub fn info(self) -> &'static TopicInfo {
        &TOPICS[self.index()]
    }

    pub fn name(self) -> &'static str {
        self.info().name
    }

    /// Position in the canonical order.
    pub fn index(self) -> usize {
        self as usize
    }

    /// Exact, case-sensitive lookup. Only surrounding whitespace is ignored.
    pub fn parse(name: &str) -> Result<Topic, Error> {
        let trimmed = name.trim();
        TOPICS
            .iter()
            .find(|info| info.name == trimmed)
            .map(|info| info.topic)
            .ok_or_else(|| Error::UnknownTopic(trimmed.to_string()))
    }
}

/// Full descriptive table in canonical order.
pub fn list_topics() -> &'static [TopicInfo; TOPIC_COUNT] {
    &TOPICS
}

pub fn parse_topic(name: &str) -> Result<Topic, Error> {
    Topic::parse(name)
}

impl fmt::Display for Topic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Topic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Topic::parse(s)
    }
}

impl Serialize for Topic {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Topic {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Topic::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Coarse partition of topics by Internet exposure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NetworkClass {
    #[serde(rename = "Remote network")]
    RemoteNetwork,
    #[serde(rename = "Local")]
    Local,
}

impl NetworkClass {
    pub const ALL: [NetworkClass; 2] = [NetworkClass::RemoteNetwork, NetworkClass::Local];

    pub fn label(self) -> &'static str {
        match self {
            NetworkClass::RemoteNetwork => "Remote network",
            NetworkClass::Local => "Local",
        }
    }

    pub fn parse(s: &str) -> Result<NetworkClass, Error> {
        match s.trim() {
            "Remote network" => Ok(NetworkClass::RemoteNetwork),
            "Local" => Ok(NetworkClass::Local),
            other => Err(Error::UnknownClass(other.to_string())),
        }
    }
}

impl fmt::Display for NetworkClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Total mapping from topics to network classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassPartition {
    /// Topics mapped to `RemoteNetwork`; everything else is `Local`.
    remote: Vec<Topic>,
}

impl Default for ClassPartition {
    fn default() -> Self {
        ClassPartition::with_remote([
            Topic::System,
            Topic::Database,
            Topic::Communications,
            Topic::Security,
            Topic::Internet,
            Topic::Utilities,
        ])
    }
}

impl ClassPartition {
    pub fn with_remote(remote: impl IntoIterator<Item = Topic>) -> Self {
        let mut remote: Vec<Topic> = remote.into_iter().collect();
        remote.sort();
        remote.dedup();
        ClassPartition { remote }
    }

    pub fn class_of(&self, topic: Topic) -> NetworkClass {
        if self.remote.binary_search(&topic).is_ok() {
            NetworkClass::RemoteNetwork
        } else {
            NetworkClass::Local
        }
    }

    pub fn topics_in(&self, class: NetworkClass) -> Vec<Topic> {
        Topic::all().filter(|t| self.class_of(*t) == class).collect()
    }
}

/// Class of a topic under the default partition.
pub fn class_of(topic: Topic) -> NetworkClass {
    ClassPartition::default().class_of(topic)
}

/// Taxonomy as CSV: name, class, description, subcategories joined by `"; "`.
pub fn taxonomy_csv(partition: &ClassPartition) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(["name", "class", "description", "subcategories"])
        .expect("in-memory write");
    for info in TOPICS.iter() {
        w.write_record([
            info.name,
            partition.class_of(info.topic).label(),
            info.description,
            &info.subcategories.join("; "),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_listing() {
        let topics = list_topics();
        assert_eq!(topics.len(), 24);
        assert_eq!(topics[0].name, "Adaptive Technologies");
        assert!(topics.iter().any(|t| t.name == "Other/Nonlisted Topic"));
        assert_eq!(list_topics(), list_topics());
        for (i, info) in topics.iter().enumerate() {
            assert_eq!(info.topic.index(), i);
        }
    }

    #[test]
    fn parse_exact_names() {
        assert_eq!(parse_topic("Internet").unwrap(), Topic::Internet);
        assert_eq!(parse_topic("Office/Business").unwrap(), Topic::OfficeBusiness);
        assert_eq!(parse_topic("  Internet ").unwrap(), Topic::Internet);
        assert!(matches!(parse_topic("Networking"), Err(Error::UnknownTopic(_))));
        assert!(parse_topic("internet").is_err());
        assert!(parse_topic("Games/ Entertainment").is_err());
    }

    #[test]
    fn round_trip_every_topic() {
        for t in Topic::all() {
            assert_eq!(parse_topic(t.name()).unwrap(), t);
        }
    }

    #[test]
    fn default_partition() {
        assert_eq!(class_of(Topic::Database), NetworkClass::RemoteNetwork);
        assert_eq!(class_of(Topic::TextProcessing), NetworkClass::Local);
        assert_eq!(class_of(Topic::ScientificEngineering), NetworkClass::Local);
        let remote = Topic::all()
            .filter(|t| class_of(*t) == NetworkClass::RemoteNetwork)
            .count();
        assert_eq!(remote, 6);
        assert_eq!(24 - remote, 18);
    }

    #[test]
    fn office_subcategories() {
        assert_eq!(
            Topic::OfficeBusiness.info().subcategories,
            &["Financial", "Groupware", "News/Diary", "Scheduling", "Office Suites"]
        );
        assert_eq!(Topic::Sociology.info().subcategories, &["Genealogy", "History"]);
    }

    #[test]
    fn csv_export_has_header_and_24_rows() {
        let text = taxonomy_csv(&ClassPartition::default());
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let rows: Vec<csv::StringRecord> = r.records().map(|r| r.unwrap()).collect();
        assert_eq!(rows.len(), 24);
        assert_eq!(&rows[2][0], "Database");
        assert_eq!(&rows[2][1], "Remote network");
        assert_eq!(&rows[2][3], "Database Engines/Servers; Front-Ends");
    }
}
