type FieldType = "text" | "numeric" | "date" | "choice" | 
                 "pass_fail" | "timestamp" | "boolean";

class Field {
    type: FieldType[];
    value: any;
    constructor(type: FieldType[], value: any) {
        this.type = type;
        this.value = value;
    }
}

class Header {
    completion_date: Field;
    expiry_date: Field;
    name: Field;
    quantity: Field;
    sku: Field;
    start_date: Field;
    
    constructor() {
        this.completion_date = new Field(
            ["date"], 
            "The date the batch process was completed"
        );
        this.expiry_date = new Field(
            ["date"], 
            "Expiration date of the final product batch"
        );
        this.name = new Field(
            ["text"], 
            "Name of the batch record template"
        );
        this.quantity = new Field(
            ["numeric"], 
            "The quantity or yield of the final product"
        );
        this.sku = new Field(
            ["text"], 
            "Stock Keeping Unit identifier"
        );
        this.start_date = new Field(
            ["date"], 
            "Date when the batch process started"
        );
    }
}

class Content {
    type: "paragraph" | "bullet_list" | "numbered_list" | 
          "note" | "warning" | "instruction" | "data_form" | 
          "calculation" | "table" | "image";
    text: string;
    items?: string[];
    fields?: {
        label: string;
        value: string | null;
        unit?: string;
        limits?: string;
        notes?: string;
    }[];
    calculation?: {
        formula: string;
        variables: {
            name: string;
            description: string;
            value?: any;
            unit?: string;
        }[];
        result?: {
            value: any;
            unit?: string;
        };
        notes?: string;
    };
    headers?: string[];
    rows?: any[][];
}

class Step {
    id: string;
    phase_id: string;
    group_id: string;
    step_name: Field;
    step_type: Field;
    content: Content[];
}

class Phase {
    id: string;
    group_id: string;
    phase_name: Field;
}

class Group {
    id: string;
    group_name: Field;
}
